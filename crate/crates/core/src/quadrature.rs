//! One-dimensional Gauss–Legendre rules, the product rule on the unit
//! sphere, and adaptive Simpson integration.

use std::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::momentum::Vec3;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[−1, 1]`,
/// nodes in increasing order.
pub fn gauss_legendre(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(invalid("Gauss–Legendre rule needs at least one node"));
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    for i in 0..m {
        // Tricomi's initial guess, then Newton on P_n.
        let mut x = ((i as f64 + 0.75) / (nf + 0.5) * PI).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok((nodes, weights))
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// Gauss–Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on(a: f64, b: f64, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let (x, w) = gauss_legendre(n)?;
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    Ok((x.iter().map(|t| mid + half * t).collect(), w.iter().map(|wi| half * wi).collect()))
}

/// Product rule on S²: Gauss–Legendre in `cos θ` times the uniform
/// trapezoid rule in `φ`, `m²` nodes in total.
#[derive(Clone, Debug)]
pub struct SphereRule {
    pub nodes: Vec<Vec3>,
    pub weights: Vec<f64>,
}

impl SphereRule {
    pub fn product(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(invalid(format!("sphere rule needs at least 2 nodes per direction, got {m}")));
        }
        let (ct, wt) = gauss_legendre(m)?;
        let dphi = 2.0 * PI / m as f64;
        let mut nodes = Vec::with_capacity(m * m);
        let mut weights = Vec::with_capacity(m * m);
        for (c, w) in ct.iter().zip(&wt) {
            let st = (1.0 - c * c).max(0.0).sqrt();
            for j in 0..m {
                let phi = (j as f64 + 0.5) * dphi;
                nodes.push(Vec3::new(st * phi.cos(), st * phi.sin(), *c));
                weights.push(w * dphi);
            }
        }
        Ok(Self { nodes, weights })
    }

    /// Half of an antipodally symmetric rule with doubled weights. Exact
    /// for integrands with `F(−ω) = F(ω)`. For odd `m` the rule is not
    /// antipodally closed and is returned unchanged.
    pub fn folded(m: usize) -> Result<Self> {
        let full = Self::product(m)?;
        if m % 2 == 1 {
            return Ok(full);
        }
        // cos θ rows m/2..m are the upper hemisphere; the offset φ grid maps
        // φ ↦ φ + π onto itself for even m.
        let half = m * m / 2;
        Ok(Self { nodes: full.nodes[half..].to_vec(), weights: full.weights[half..].iter().map(|w| 2.0 * w).collect() })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, mut f: impl FnMut(&Vec3) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(w, wt)| wt * f(w)).sum()
    }
}

/// Adaptive Simpson integration with absolute tolerance `tol`.
pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, max_depth: u32) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, max_depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}
