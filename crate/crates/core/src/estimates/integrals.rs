//! Quadrature checks of the integral bounds.
//!
//! The integrals `∫|v−u|^{−α}e^{−|u|²}du` and `∫v_φ g^{−β}e^{−|u|²}du`
//! depend on `u` only through `ρ = |u − v|` and the angle between `u − v`
//! and `−v`, so they reduce to two-dimensional integrals in `(ρ, μ)`.
//! The singularity at `ρ = 0` is removed by the substitution `ρ ∝ x^m`;
//! the Gaussian peak near `μ = 1` is resolved by geometric panels in
//! `1 − μ`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{fit_exponent, CaseRecord, CheckReport, Tally};
use crate::error::{invalid, Result};
use crate::kernels::{AngularMode, KernelParams};
use crate::kinematics::CollisionPair;
use crate::momentum::Vec3;
use crate::quadrature::{gauss_legendre, SphereRule};

/// Momentum magnitudes at which the bounds are probed.
pub const V_LIST: [f64; 4] = [0.0, 1.0, 5.0, 20.0];

/// Allowed relative change of a fitted constant under refinement.
pub const REFINEMENT_TOL: f64 = 0.2;

/// Allowed excess of a fitted `R`-exponent over the one in the bound.
pub const EXPONENT_TOL: f64 = 0.15;

/// Radial cutoff beyond the Gaussian peak; `e^{−6.5²}` is below roundoff.
const TAIL: f64 = 6.5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum IntegralCheck {
    /// `∫|v−u|^{−α}e^{−|u|²}du ≤ C_α(1+|v|²)^{−α/2}`, `0 ≤ α < 3`.
    L2_3 { alpha: f64 },
    /// `∫v_φ g^{−β}e^{−|u|²}du ≤ C` for `β ≤ 1`, `≤ C R^{β−1}` for
    /// `1 ≤ β < 4`.
    L3_3 { beta: f64 },
}

impl IntegralCheck {
    pub fn name(&self) -> String {
        match self {
            IntegralCheck::L2_3 { alpha } => format!("L2_3(alpha={alpha})"),
            IntegralCheck::L3_3 { beta } => format!("L3_3(beta={beta})"),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            IntegralCheck::L2_3 { alpha } if !(0.0..3.0).contains(&alpha) => {
                Err(invalid(format!("alpha must lie in [0, 3), got {alpha}")))
            }
            IntegralCheck::L3_3 { beta } if !(0.0..4.0).contains(&beta) => {
                Err(invalid(format!("beta must lie in [0, 4), got {beta}")))
            }
            _ => Ok(()),
        }
    }

    /// Power of `ρ` in `ρ²·integrand` near `ρ = 0`.
    fn singular_power(&self) -> f64 {
        match *self {
            IntegralCheck::L2_3 { alpha } => 2.0 - alpha,
            IntegralCheck::L3_3 { beta } => 3.0 - beta,
        }
    }

    /// Shape of the bound, without its constant.
    pub fn bound_shape(&self, v_norm: f64, r: f64) -> f64 {
        match *self {
            IntegralCheck::L2_3 { alpha } => (1.0 + v_norm * v_norm).powf(-0.5 * alpha),
            IntegralCheck::L3_3 { beta } => r.powf((beta - 1.0).max(0.0)),
        }
    }

    /// `R`-exponent of the bound.
    pub fn bound_exponent(&self) -> f64 {
        match *self {
            IntegralCheck::L2_3 { .. } => 0.0,
            IntegralCheck::L3_3 { beta } => (beta - 1.0).max(0.0),
        }
    }
}

/// Gauss–Legendre nodes per panel and the radial panel width.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegralGrid {
    pub radial_nodes: usize,
    pub angular_nodes: usize,
    pub panel_width: f64,
}

impl Default for IntegralGrid {
    fn default() -> Self {
        Self { radial_nodes: 8, angular_nodes: 8, panel_width: 0.25 }
    }
}

impl IntegralGrid {
    pub fn refined(&self) -> Self {
        Self {
            radial_nodes: 2 * self.radial_nodes,
            angular_nodes: 2 * self.angular_nodes,
            panel_width: 0.5 * self.panel_width,
        }
    }
}

/// Integrand of the chosen check times `e^{−|u|²}`, at `ρ = |u − v|` and
/// `t = 1 − μ`, without the volume factor `ρ²`.
fn integrand(check: &IntegralCheck, v_norm: f64, r: f64, rho: f64, t: f64) -> f64 {
    let mu = 1.0 - t;
    let along = v_norm - rho * mu;
    let u2 = along * along + rho * rho * t * (2.0 - t);
    let gauss = (-u2).exp();
    match *check {
        IntegralCheck::L2_3 { alpha } => rho.powf(-alpha) * gauss,
        IntegralCheck::L3_3 { beta } => {
            let r2 = r * r;
            let v0 = (1.0 + v_norm * v_norm / r2).sqrt();
            let u0 = (1.0 + u2 / r2).sqrt();
            let n0 = v0 + u0;
            let c = 2.0 * v_norm * mu - rho;
            let g = rho / r * (1.0 - c * c / (r2 * n0 * n0)).max(0.0).sqrt();
            let sqrt_s = (4.0 + g * g).sqrt();
            g.powf(1.0 - beta) * sqrt_s / (v0 * u0) * gauss
        }
    }
}

/// The integral at `|v| = v_norm`, scale factor `r`.
pub fn integral_value(check: IntegralCheck, v_norm: f64, r: f64, grid: IntegralGrid) -> Result<f64> {
    check.validate()?;
    if !(v_norm >= 0.0 && v_norm.is_finite() && r > 0.0 && r.is_finite()) {
        return Err(invalid(format!("need |v| ≥ 0 and R > 0, got {v_norm}, {r}")));
    }
    let (xr, wr) = gauss_legendre(grid.radial_nodes)?;
    let (xa, wa) = gauss_legendre(grid.angular_nodes)?;
    let p = check.singular_power();
    let m = if p < 0.0 { 1.0 / (p + 1.0) } else { 1.0 };
    let h = grid.panel_width;
    let rho_max = v_norm + TAIL;

    let mut nodes: Vec<(f64, f64)> = Vec::new();
    // First panel: ρ = h·x^m on x ∈ [0, 1].
    for (x, w) in xr.iter().zip(&wr) {
        let x = 0.5 * (x + 1.0);
        let rho = h * x.powf(m);
        nodes.push((rho, 0.5 * w * h * m * x.powf(m - 1.0)));
    }
    let mut a = h;
    while a < rho_max {
        let b = (a + h).min(rho_max);
        for (x, w) in xr.iter().zip(&wr) {
            nodes.push((0.5 * (a + b) + 0.5 * (b - a) * x, 0.5 * (b - a) * w));
        }
        a = b;
    }

    let mut total = 0.0;
    for (rho, wrho) in nodes {
        let rate = 2.0 * rho * v_norm;
        let mut lo = 0.0;
        let mut hi = (1.0 / (1.0 + rate)).min(2.0);
        let mut inner = 0.0;
        loop {
            for (x, w) in xa.iter().zip(&wa) {
                let t = 0.5 * (lo + hi) + 0.5 * (hi - lo) * x;
                inner += 0.5 * (hi - lo) * w * integrand(&check, v_norm, r, rho, t);
            }
            if hi >= 2.0 {
                break;
            }
            lo = hi;
            hi = (2.0 * hi).min(2.0);
        }
        total += wrho * rho * rho * inner;
    }
    Ok(2.0 * PI * total)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegralPoint {
    pub v_norm: f64,
    pub r: f64,
    pub coarse: f64,
    pub refined: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegralStudy {
    pub report: CheckReport,
    pub points: Vec<IntegralPoint>,
    /// Smallest constant for which the bound holds on the refined grid.
    pub constant: f64,
    pub constant_coarse: f64,
    /// Fitted `R`-exponent of `max_{|v|} I(v, R)`, when more than one `R`
    /// was given.
    pub exponent: Option<f64>,
    /// Fitted `R`-exponent at each probed `|v|`.
    pub exponents_by_v: Vec<(f64, f64)>,
}

/// Evaluates the integral at `|v| ∈ V_LIST` and every `R` in `r_list` on
/// `grid` and its refinement, fits the constant of the bound, and, for
/// several `R`, the scaling exponent. Violations: a constant that moves by
/// more than [`REFINEMENT_TOL`] under refinement, or a fitted exponent
/// above the bound's by more than [`EXPONENT_TOL`].
pub fn verify_integral_bounds(check: IntegralCheck, grid: IntegralGrid, r_list: &[f64]) -> Result<IntegralStudy> {
    check.validate()?;
    if r_list.is_empty() {
        return Err(invalid("need at least one scale factor"));
    }
    let fine = grid.refined();
    let mut points = Vec::new();
    for &r in r_list {
        for &v in &V_LIST {
            points.push(IntegralPoint {
                v_norm: v,
                r,
                coarse: integral_value(check, v, r, grid)?,
                refined: integral_value(check, v, r, fine)?,
            });
        }
    }
    let ratio = |p: &IntegralPoint, val: f64| val / check.bound_shape(p.v_norm, p.r);
    let constant = points.iter().map(|p| ratio(p, p.refined)).fold(0.0, f64::max);
    let constant_coarse = points.iter().map(|p| ratio(p, p.coarse)).fold(0.0, f64::max);
    let change = (constant - constant_coarse).abs() / constant;

    let mut tally = Tally::new(0.0);
    for p in &points {
        tally.sample();
        let local = (p.refined - p.coarse).abs() / p.refined.abs().max(f64::MIN_POSITIVE);
        tally.record_max("max_point_refinement_change", local);
    }
    tally.excess("constant refinement", change - REFINEMENT_TOL, || {
        CaseRecord::new("constant refinement").with("C", &[constant_coarse, constant])
    });

    let mut exponent = None;
    let mut exponents_by_v = Vec::new();
    if r_list.len() > 1 {
        for &v in &V_LIST {
            let ys: Vec<f64> = points.iter().filter(|p| p.v_norm == v).map(|p| p.refined).collect();
            exponents_by_v.push((v, fit_exponent(r_list, &ys)?));
        }
        let maxima: Vec<f64> =
            r_list.iter().map(|&r| points.iter().filter(|p| p.r == r).map(|p| p.refined).fold(0.0, f64::max)).collect();
        let e = fit_exponent(r_list, &maxima)?;
        tally.excess("R exponent", e - check.bound_exponent() - EXPONENT_TOL, || {
            CaseRecord::new("R exponent").with("R", r_list).with("max_I", &maxima)
        });
        exponent = Some(e);
    }

    let mut report = tally.into_report(check.name());
    report.metrics.insert("C".into(), constant);
    report.metrics.insert("C_coarse".into(), constant_coarse);
    report.metrics.insert("refinement_change".into(), change);
    if let Some(e) = exponent {
        report.metrics.insert("exponent".into(), e);
        report.metrics.insert("bound_exponent".into(), check.bound_exponent());
        for (v, ev) in &exponents_by_v {
            report.metrics.insert(format!("exponent[|v|={v}]"), *ev);
        }
    }
    Ok(IntegralStudy { report, points, constant, constant_coarse, exponent, exponents_by_v })
}

/// `∬σ₀(ω)e^{−|u|²}dω du ≤ 4πσ₁π^{3/2}` by direct quadrature, for both
/// angular modes, `B ∈ {0.1, 1, 10}`, `R ∈ {1, 10, 100}` and `|v|` in
/// [`V_LIST`]. Allowed relative excess: `1e-6`, the quadrature accuracy.
pub fn verify_trivial_integral() -> Result<CheckReport> {
    let sigma1 = 1.0;
    let bound = 4.0 * PI * sigma1 * PI.powf(1.5);
    let (xr, wr) = gauss_legendre(24)?;
    let u_dirs = SphereRule::product(10)?;
    let omegas = SphereRule::product(12)?;
    let mut tally = Tally::new(1e-6);
    for b in [0.1, 1.0, 10.0] {
        for mode in [AngularMode::SharpCutoff, AngularMode::SmoothCutoff { width: 0.5 * b }] {
            let params = KernelParams::new(1.0, 0.0, sigma1, b, mode)?;
            for r in [1.0, 10.0, 100.0] {
                for &vn in &V_LIST {
                    let v = Vec3::new(0.0, 0.0, vn);
                    let mut total = 0.0;
                    for (x, w) in xr.iter().zip(&wr) {
                        let rho = 0.5 * TAIL * (x + 1.0);
                        let radial = 0.5 * TAIL * w * rho * rho * (-rho * rho).exp();
                        for (dir, wd) in u_dirs.nodes.iter().zip(&u_dirs.weights) {
                            let pair = CollisionPair::from_vecs(v, rho * dir, r)?;
                            let ang =
                                omegas.integrate(|om| params.sigma0(params.cutoff_weight(pair.cutoff_quantity(om))));
                            total += radial * wd * ang;
                        }
                    }
                    tally.sample();
                    tally.record_max("max ratio to bound", total / bound);
                    tally.le("integral<=4pi sigma1 pi^1.5", total, bound, bound, || {
                        CaseRecord::new("L3_2").with("v", &[0.0, 0.0, vn]).with("R", &[r]).with("B", &[b])
                    });
                }
            }
        }
    }
    Ok(tally.into_report("L3_2"))
}
