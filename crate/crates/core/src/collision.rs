//! The collision operator
//! `Q(f,f)(v) = R⁻³ ∫∫ v_φ σ(g,ω) [f(v')f(u') − f(v)f(u)] dω du`
//! by product quadrature on the grid and by Monte Carlo.
//!
//! The angular rule is folded onto a hemisphere: replacing `ω` by `−ω`
//! swaps `v'` and `u'` in both parametrizations and leaves the cutoff
//! quantity unchanged, so every angular integrand used here is even.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cosmology::ScaleFactorSpec;
use crate::distribution::{DistributionField, VGrid};
use crate::error::{invalid, Result};
use crate::kernels::{KernelParams, ReferenceKernel, ScatteringKernel};
use crate::kinematics::{lift_raw, CollisionPair, Representation};
use crate::momentum::{Momentum3, Vec3};
use crate::quadrature::SphereRule;
use crate::sampling::{chunk_rng, gaussian_vec, unit_vec};

/// Pairs with `g` below this are skipped: `v' = v`, `u' = u` there.
pub const G_SKIP: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum UIntegration {
    /// Trapezoid rule on every node of the field grid.
    ReuseGrid,
    /// Trapezoid rule on every `stride`-th node per axis (the last node of
    /// each axis is always kept).
    SubsampledGrid { stride: usize },
}

/// Drops pairs whose contribution is certified negligible.
///
/// With `M = max e^{γ|x|²}f` the interpolated field obeys
/// `f(x) ≤ M e^{−γ(|x|−δ)₊²}`, `δ` the half cell diagonal. Post-collisional
/// momenta on the support of the kernel satisfy
/// `|v'|² + |u'|² ≥ |v|² + |u|² − B`, so both parts of a pair are bounded by
/// `M² e^{−γE}` for an explicit `E(|v|² + |u|²)`. A pair is skipped when that
/// bound is below `tol · (max f)²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairScreen {
    pub decay_rate: f64,
    pub tol: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Nodes per angular direction; `angular_nodes²` directions in total.
    pub angular_nodes: usize,
    pub u_integration: UIntegration,
    pub screen: Option<PairScreen>,
}

impl QuadratureSpec {
    pub fn new(angular_nodes: usize, u_integration: UIntegration) -> Self {
        Self { angular_nodes, u_integration, screen: None }
    }

    pub fn validate(&self) -> Result<()> {
        if self.angular_nodes < 6 {
            return Err(invalid(format!("quadrature.angular_nodes must be at least 6, got {}", self.angular_nodes)));
        }
        if let UIntegration::SubsampledGrid { stride } = self.u_integration {
            if stride == 0 {
                return Err(invalid("quadrature.u_stride must be positive"));
            }
        }
        if let Some(s) = self.screen {
            if !(s.decay_rate > 0.0 && s.decay_rate.is_finite()) {
                return Err(invalid(format!("quadrature.decay_rate must be positive, got {}", s.decay_rate)));
            }
            if !(s.tol > 0.0 && s.tol < 1.0) {
                return Err(invalid(format!("quadrature.pair_tol must lie in (0, 1), got {}", s.tol)));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McSpec {
    pub nsamples: usize,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RepMode {
    OmegaR,
    OmegaRS,
    /// Ω_R when `|v| ≤ R` or `|v| ≤ 2|u|`, Ω_RS otherwise.
    Adaptive,
}

impl RepMode {
    #[inline]
    pub fn pick(self, v: &Vec3, u: &Vec3, r: f64) -> Representation {
        match self {
            Self::OmegaR => Representation::OmegaR,
            Self::OmegaRS => Representation::OmegaRS,
            Self::Adaptive => {
                let (v2, u2) = (v.norm_squared(), u.norm_squared());
                if v2 <= r * r || v2 <= 4.0 * u2 {
                    Representation::OmegaR
                } else {
                    Representation::OmegaRS
                }
            }
        }
    }
}

impl From<Representation> for RepMode {
    fn from(rep: Representation) -> Self {
        match rep {
            Representation::OmegaR => Self::OmegaR,
            Representation::OmegaRS => Self::OmegaRS,
        }
    }
}

impl std::str::FromStr for RepMode {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Adaptive" | "adaptive" => Ok(Self::Adaptive),
            other => other.parse::<Representation>().map(Self::from),
        }
    }
}

#[inline]
fn post_raw(pair: &CollisionPair, omega: &Vec3, rep: Representation) -> Vec3 {
    match rep {
        Representation::OmegaR => pair.post_omega_r_raw(omega).0,
        Representation::OmegaRS => pair.post_omega_rs_raw(omega).0,
    }
}

#[derive(Clone, Copy, Debug)]
struct UNode {
    u: Vec3,
    u2: f64,
    weight: f64,
    f: f64,
}

/// Per-field precomputation: the `u` rule sorted by `|u|²` and the
/// screening threshold.
struct Prepared {
    unodes: Vec<UNode>,
    /// Pairs with `|v|² + |u|²` above this are skipped.
    pair_limit: f64,
    zero: bool,
}

/// Trapezoid weights on the index subset `0, s, 2s, …, n−1` of one axis.
fn axis_rule(grid: &VGrid, stride: usize) -> Vec<(usize, f64)> {
    let n = grid.n;
    let mut idx: Vec<usize> = (0..n).step_by(stride).collect();
    if *idx.last().unwrap() != n - 1 {
        idx.push(n - 1);
    }
    let x: Vec<f64> = idx.iter().map(|&i| grid.coord(i)).collect();
    (0..idx.len())
        .map(|k| {
            let left = if k == 0 { 0.0 } else { x[k] - x[k - 1] };
            let right = if k + 1 == idx.len() { 0.0 } else { x[k + 1] - x[k] };
            (idx[k], 0.5 * (left + right))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Split {
    pub gain: f64,
    pub loss: f64,
}

impl Split {
    pub fn total(&self) -> f64 {
        self.gain - self.loss
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
}

impl McEstimate {
    fn from_sums(sum: f64, sum2: f64, n: usize) -> Self {
        let nf = n as f64;
        let mean = sum / nf;
        let var = ((sum2 / nf - mean * mean) * nf / (nf - 1.0).max(1.0)).max(0.0);
        Self { estimate: mean, stderr: (var / nf).sqrt() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Invariant {
    One,
    V1,
    V2,
    V3,
    V0,
}

impl Invariant {
    pub const ALL: [Invariant; 5] = [Self::One, Self::V1, Self::V2, Self::V3, Self::V0];

    #[inline]
    pub fn eval(self, v: &Vec3, r: f64) -> f64 {
        match self {
            Self::One => 1.0,
            Self::V1 => v.x,
            Self::V2 => v.y,
            Self::V3 => v.z,
            Self::V0 => lift_raw(v, r),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WeakEstimate {
    pub estimate: f64,
    pub stderr: f64,
    /// Largest `|φ(v') + φ(u') − φ(v) − φ(u)|` over the sampled collisions.
    pub max_bracket: f64,
    pub collisions: usize,
}

#[derive(Clone, Debug)]
pub struct CollisionOperator<K: ScatteringKernel = ReferenceKernel> {
    pub kernel: K,
    pub quad: QuadratureSpec,
    pub rep: RepMode,
    sphere: SphereRule,
}

impl<K: ScatteringKernel> CollisionOperator<K> {
    pub fn new(kernel: K, quad: QuadratureSpec, rep: RepMode) -> Result<Self> {
        kernel.params().validate()?;
        quad.validate()?;
        let sphere = SphereRule::folded(quad.angular_nodes)?;
        Ok(Self { kernel, quad, rep, sphere })
    }

    pub fn params(&self) -> &KernelParams {
        self.kernel.params()
    }

    fn prepare(&self, field: &DistributionField) -> Prepared {
        let grid = &field.grid;
        let stride = match self.quad.u_integration {
            UIntegration::ReuseGrid => 1,
            UIntegration::SubsampledGrid { stride } => stride,
        };
        let axis = axis_rule(grid, stride);
        let mut unodes = Vec::with_capacity(axis.len().pow(3));
        for &(i, wi) in &axis {
            for &(j, wj) in &axis {
                for &(k, wk) in &axis {
                    let idx = grid.index(i, j, k);
                    let u = grid.node(idx);
                    unodes.push(UNode { u, u2: u.norm_squared(), weight: wi * wj * wk, f: field.values[idx] });
                }
            }
        }
        // Stable sort keeps the lexicographic order within equal radii.
        unodes.sort_by(|a, b| a.u2.total_cmp(&b.u2));

        let fmax = field.max_value();
        let mut pair_limit = f64::INFINITY;
        if let Some(screen) = self.quad.screen {
            if fmax > 0.0 {
                let gamma = screen.decay_rate;
                let m = field.weighted_sup(0.0, gamma);
                // Skip when γE > L with E(S) = S − 2√2 δ √S, S = |v|² + |u|² − B.
                let l = (m * m / (screen.tol * fmax * fmax)).ln().max(0.0);
                let delta = 0.5 * 3f64.sqrt() * grid.h();
                let root = 2f64.sqrt() * delta + (2.0 * delta * delta + l / gamma).sqrt();
                pair_limit = root * root + self.params().cutoff;
            }
        }
        Prepared { unodes, pair_limit, zero: fmax == 0.0 }
    }

    fn split_prepared(&self, field: &DistributionField, prep: &Prepared, v: &Vec3, r: f64) -> Result<Split> {
        if prep.zero {
            return Ok(Split::default());
        }
        let v2 = v.norm_squared();
        let u_limit = prep.pair_limit - v2;
        if u_limit < 0.0 {
            return Ok(Split::default());
        }
        let count = prep.unodes.partition_point(|n| n.u2 <= u_limit);
        let interp = field.interpolator();
        let f_v = interp.eval(v);
        let params = *self.params();
        let inv_r2 = 1.0 / (r * r);
        let (mut gain, mut loss) = (0.0, 0.0);
        for node in &prep.unodes[..count] {
            let pair = CollisionPair::from_vecs(*v, node.u, r)?;
            if pair.g < G_SKIP {
                continue;
            }
            let base = node.weight * self.kernel.flux_sigma(pair.g, pair.sqrt_s, pair.v0 * pair.u0, 1.0);
            if base == 0.0 {
                continue;
            }
            // Constants of the angular loop; see `CollisionPair::cutoff_quantity`
            // and the two `post_*_raw` methods.
            let cut = pair.d2 * inv_r2 / (2.0 * pair.s);
            let half_n = 0.5 * pair.n;
            let half_rg = 0.5 * r * pair.g;
            let (mut g_sum, mut w_sum) = (0.0, 0.0);
            let mut visit = |ww: f64, vp: Vec3| {
                w_sum += ww;
                let fv = interp.eval(&vp);
                if fv != 0.0 {
                    g_sum += ww * fv * interp.eval(&(pair.n - vp));
                }
            };
            let nodes = self.sphere.nodes.iter().zip(&self.sphere.weights);
            match self.rep.pick(v, &node.u, r) {
                Representation::OmegaR => {
                    let n0sq = pair.n0 * pair.n0;
                    let scale = half_rg * pair.n0;
                    for (omega, w_omega) in nodes {
                        let nw = pair.n.dot(omega);
                        let w = params.cutoff_weight(cut * (pair.nn - nw * nw).max(0.0));
                        if w == 0.0 {
                            continue;
                        }
                        let root = (n0sq - nw * nw * inv_r2).sqrt();
                        visit(w_omega * w, half_n + (scale / root) * omega);
                    }
                }
                Representation::OmegaRS => {
                    let project = pair.nn.sqrt() >= crate::kinematics::N_PROJECTION_EPS;
                    let coef = if project { (pair.n0 / pair.sqrt_s - 1.0) / pair.nn } else { 0.0 };
                    for (omega, w_omega) in nodes {
                        let nw = pair.n.dot(omega);
                        let w = params.cutoff_weight(cut * (pair.nn - nw * nw).max(0.0));
                        if w == 0.0 {
                            continue;
                        }
                        let dir = omega + (coef * nw) * pair.n;
                        visit(w_omega * w, half_n + half_rg * dir);
                    }
                }
            }
            gain += base * g_sum;
            loss += base * w_sum * f_v * node.f;
        }
        let scale = r.powi(-3);
        Ok(Split { gain: scale * gain, loss: scale * loss })
    }

    /// Gain and loss parts at scale factor `r`.
    pub fn split_at(&self, field: &DistributionField, v: &Vec3, r: f64) -> Result<Split> {
        crate::kinematics::check_scale(r)?;
        let prep = self.prepare(field);
        self.split_prepared(field, &prep, v, r)
    }

    pub fn eval_at(&self, field: &DistributionField, v: &Vec3, r: f64) -> Result<f64> {
        Ok(self.split_at(field, v, r)?.total())
    }

    /// Gain and loss at every node, in parallel. Each node is summed in a
    /// fixed order, so the result does not depend on the thread count.
    pub fn split_field(&self, field: &DistributionField, r: f64) -> Result<Vec<Split>> {
        crate::kinematics::check_scale(r)?;
        let prep = self.prepare(field);
        (0..field.grid.len())
            .into_par_iter()
            .map(|idx| self.split_prepared(field, &prep, &field.grid.node(idx), r))
            .collect()
    }

    /// Gain and loss at the listed nodes only.
    pub fn split_nodes(&self, field: &DistributionField, nodes: &[usize], r: f64) -> Result<Vec<Split>> {
        crate::kinematics::check_scale(r)?;
        let prep = self.prepare(field);
        nodes.par_iter().map(|&idx| self.split_prepared(field, &prep, &field.grid.node(idx), r)).collect()
    }

    pub fn field(&self, field: &DistributionField, r: f64) -> Result<Vec<f64>> {
        Ok(self.split_field(field, r)?.iter().map(Split::total).collect())
    }

    /// Monte Carlo estimate of `Q(v)` with `u` drawn from
    /// `π^{−3/2}e^{−|u|²}` and `ω` uniform.
    pub fn mc_at(&self, field: &DistributionField, v: &Vec3, r: f64, mc: &McSpec) -> Result<McEstimate> {
        crate::kinematics::check_scale(r)?;
        if mc.nsamples < 2 {
            return Err(invalid("Monte Carlo needs at least two samples"));
        }
        let mut rng = chunk_rng(mc.seed, 0);
        let norm = 4.0 * PI * PI.powf(1.5) * r.powi(-3);
        let f_v = field.interpolate_vec(v);
        let params = *self.params();
        let (mut sum, mut sum2) = (0.0, 0.0);
        for _ in 0..mc.nsamples {
            let u = gaussian_vec(&mut rng, std::f64::consts::FRAC_1_SQRT_2);
            let omega = unit_vec(&mut rng);
            let pair = CollisionPair::from_vecs(*v, u, r)?;
            if pair.g < G_SKIP {
                continue;
            }
            let w = params.cutoff_weight(pair.cutoff_quantity(&omega));
            if w == 0.0 {
                continue;
            }
            let vp = post_raw(&pair, &omega, self.rep.pick(v, &u, r));
            let bracket =
                field.interpolate_vec(&vp) * field.interpolate_vec(&(pair.n - vp)) - f_v * field.interpolate_vec(&u);
            if bracket == 0.0 {
                continue;
            }
            let x = norm
                * u.norm_squared().exp()
                * self.kernel.flux_sigma(pair.g, pair.sqrt_s, pair.v0 * pair.u0, w)
                * bracket;
            sum += x;
            sum2 += x * x;
        }
        Ok(McEstimate::from_sums(sum, sum2, mc.nsamples))
    }

    /// Samples `(v, u, ω)` with `v, u` from `π^{−3/2}e^{−|x|²}` and `ω`
    /// uniform; calls `visit(weight, pair, v', u')` for every sample on the
    /// kernel support, `weight` being `R⁻³ v_φσ` divided by the sampling
    /// density.
    fn sample_collisions(
        &self,
        r: f64,
        mc: &McSpec,
        mut visit: impl FnMut(f64, &CollisionPair, &Vec3, &Vec3) -> Result<()>,
    ) -> Result<()> {
        let mut rng = chunk_rng(mc.seed, 1);
        let norm = 4.0 * PI * PI.powi(3) * r.powi(-3);
        let params = *self.params();
        for _ in 0..mc.nsamples {
            let v = gaussian_vec(&mut rng, std::f64::consts::FRAC_1_SQRT_2);
            let u = gaussian_vec(&mut rng, std::f64::consts::FRAC_1_SQRT_2);
            let omega = unit_vec(&mut rng);
            let pair = CollisionPair::from_vecs(v, u, r)?;
            if pair.g < G_SKIP {
                continue;
            }
            let w = params.cutoff_weight(pair.cutoff_quantity(&omega));
            if w == 0.0 {
                continue;
            }
            let vp = post_raw(&pair, &omega, self.rep.pick(&v, &u, r));
            let up = pair.n - vp;
            let weight = norm
                * (v.norm_squared() + u.norm_squared()).exp()
                * self.kernel.flux_sigma(pair.g, pair.sqrt_s, pair.v0 * pair.u0, w);
            visit(weight, &pair, &vp, &up)?;
        }
        Ok(())
    }

    /// `∫ Q(f,f) φ dv` through the symmetrized form
    /// `½ ∫∫∫ v_φσ f f_* (φ' + φ'_* − φ − φ_*)`. The energies `v'⁰`, `u'⁰`
    /// are recomputed from the mass shell, so the bracket tests the
    /// kinematics rather than restating it.
    pub fn weak_moment(&self, field: &DistributionField, phi: Invariant, r: f64, mc: &McSpec) -> Result<WeakEstimate> {
        crate::kinematics::check_scale(r)?;
        if mc.nsamples < 2 {
            return Err(invalid("Monte Carlo needs at least two samples"));
        }
        let (mut sum, mut sum2, mut max_bracket, mut collisions) = (0.0, 0.0, 0.0f64, 0usize);
        self.sample_collisions(r, mc, |weight, pair, vp, up| {
            let bracket = phi.eval(vp, r) + phi.eval(up, r) - phi.eval(&pair.v, r) - phi.eval(&pair.u, r);
            max_bracket = max_bracket.max(bracket.abs());
            collisions += 1;
            let x = 0.5 * weight * field.interpolate_vec(&pair.v) * field.interpolate_vec(&pair.u) * bracket;
            sum += x;
            sum2 += x * x;
            Ok(())
        })?;
        let e = McEstimate::from_sums(sum, sum2, mc.nsamples);
        Ok(WeakEstimate { estimate: e.estimate, stderr: e.stderr, max_bracket, collisions })
    }

    /// Entropy production `−∫ Q ln f dv` in the symmetrized form
    /// `¼ ∫∫∫ v_φσ (f'f'_* − ff_*) ln(f'f'_*/(ff_*))`; samples where either
    /// product vanishes are dropped.
    pub fn entropy_production(&self, field: &DistributionField, r: f64, mc: &McSpec) -> Result<McEstimate> {
        crate::kinematics::check_scale(r)?;
        if mc.nsamples < 2 {
            return Err(invalid("Monte Carlo needs at least two samples"));
        }
        let (mut sum, mut sum2) = (0.0, 0.0);
        self.sample_collisions(r, mc, |weight, pair, vp, up| {
            let pre = field.interpolate_vec(&pair.v) * field.interpolate_vec(&pair.u);
            let post = field.interpolate_vec(vp) * field.interpolate_vec(up);
            if pre > 0.0 && post > 0.0 {
                let x = 0.25 * weight * (post - pre) * (post / pre).ln();
                sum += x;
                sum2 += x * x;
            }
            Ok(())
        })?;
        Ok(McEstimate::from_sums(sum, sum2, mc.nsamples))
    }
}

fn operator(kernel: &KernelParams, quad: &QuadratureSpec, rep: RepMode) -> Result<CollisionOperator> {
    CollisionOperator::new(ReferenceKernel::new(*kernel), *quad, rep)
}

/// `Q(f,f)(v)` at time `t` by product quadrature.
pub fn q_eval(
    field: &DistributionField,
    v: &Momentum3,
    t: f64,
    spec: &ScaleFactorSpec,
    kernel: &KernelParams,
    quad: &QuadratureSpec,
    rep: RepMode,
) -> Result<f64> {
    operator(kernel, quad, rep)?.eval_at(field, v.vec(), spec.r(t)?)
}

/// `Q(f,f)` at every grid node.
pub fn q_field(
    field: &DistributionField,
    t: f64,
    spec: &ScaleFactorSpec,
    kernel: &KernelParams,
    quad: &QuadratureSpec,
    rep: RepMode,
) -> Result<Vec<f64>> {
    operator(kernel, quad, rep)?.field(field, spec.r(t)?)
}

pub fn q_mc(
    field: &DistributionField,
    v: &Momentum3,
    t: f64,
    spec: &ScaleFactorSpec,
    kernel: &KernelParams,
    mc: &McSpec,
    rep: RepMode,
) -> Result<McEstimate> {
    let quad = QuadratureSpec::new(6, UIntegration::ReuseGrid);
    operator(kernel, &quad, rep)?.mc_at(field, v.vec(), spec.r(t)?, mc)
}

pub fn weak_moment(
    field: &DistributionField,
    phi: Invariant,
    t: f64,
    spec: &ScaleFactorSpec,
    kernel: &KernelParams,
    mc: &McSpec,
    rep: RepMode,
) -> Result<WeakEstimate> {
    let quad = QuadratureSpec::new(6, UIntegration::ReuseGrid);
    operator(kernel, &quad, rep)?.weak_moment(field, phi, spec.r(t)?, mc)
}
