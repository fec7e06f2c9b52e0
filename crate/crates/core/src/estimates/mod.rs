//! Numerical certification of the analytic estimates.
//!
//! Each check produces a [`CheckReport`]. Sampled checks draw on-shell
//! triples `(v, u, ω)` from seeded streams split into fixed chunks, so a
//! report depends on `(nsamples, seed)` only and not on the worker count.
//! Quadrature checks fit the anonymous constants of the integral bounds
//! and test them for stability under refinement.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::momentum::Vec3;
use crate::sampling::{chunk_rng, chunks, gaussian_vec, heavy_tail_vec, SampleRng};

mod derivatives;
mod inequalities;
mod integrals;
mod jacobians;

pub use derivatives::{analytic_derivatives, verify_derivative_identities, Derivatives};
pub use inequalities::{verify_cutoff_defect, verify_inequalities, LemmaId};
pub use integrals::{
    integral_value, verify_integral_bounds, verify_trivial_integral, IntegralCheck, IntegralGrid, IntegralStudy,
};
pub use jacobians::{fd_jacobian, verify_jacobian_bounds, JacobianStudy};

/// Allowed normalized excess for sampled inequalities.
pub const SLACK: f64 = 1e-9;

/// Scale factors cycled through by the sampled checks.
pub const R_LIST: [f64; 4] = [1.0, 2.0, 10.0, 1e3];

const CHUNK: usize = 4096;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseRecord {
    pub check: String,
    pub inputs: BTreeMap<String, Vec<f64>>,
}

impl CaseRecord {
    pub fn new(check: impl Into<String>) -> Self {
        Self { check: check.into(), inputs: BTreeMap::new() }
    }

    pub fn with(mut self, key: &str, value: &[f64]) -> Self {
        self.inputs.insert(key.to_string(), value.to_vec());
        self
    }

    pub fn with_vec(self, key: &str, v: &Vec3) -> Self {
        self.with(key, v.as_slice())
    }
}

/// Outcome of one check.
///
/// `max_slack` is the largest normalized excess `(lhs − rhs)/scale` seen
/// over all tested inequalities; it is negative when every bound held
/// with margin, and a sample counts as a violation when it exceeds the
/// check's allowed slack. `metrics` holds fitted constants and other
/// measured quantities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub lemma_id: String,
    pub samples_run: u64,
    pub violations: u64,
    pub max_slack: f64,
    pub worst_case: Option<CaseRecord>,
    pub metrics: BTreeMap<String, f64>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Per-chunk accumulator; merged in chunk order.
#[derive(Clone, Debug)]
pub(crate) struct Tally {
    samples: u64,
    violations: u64,
    max_slack: f64,
    worst: Option<CaseRecord>,
    /// Running maxima, keyed by metric name.
    maxima: BTreeMap<String, f64>,
    allowed: f64,
}

impl Tally {
    pub(crate) fn new(allowed: f64) -> Self {
        Self { samples: 0, violations: 0, max_slack: f64::NEG_INFINITY, worst: None, maxima: BTreeMap::new(), allowed }
    }

    pub(crate) fn sample(&mut self) {
        self.samples += 1;
    }

    /// Records `lhs ≤ rhs`, normalized by `scale`.
    pub(crate) fn le(&mut self, check: &str, lhs: f64, rhs: f64, scale: f64, case: impl FnOnce() -> CaseRecord) {
        let slack = (lhs - rhs) / scale.abs().max(f64::MIN_POSITIVE);
        self.excess(check, slack, case);
    }

    /// Records `|lhs − rhs| ≤ allowed·max(|lhs|, |rhs|)`.
    pub(crate) fn eq(&mut self, check: &str, lhs: f64, rhs: f64, case: impl FnOnce() -> CaseRecord) {
        let scale = lhs.abs().max(rhs.abs());
        let slack = if scale == 0.0 { 0.0 } else { (lhs - rhs).abs() / scale };
        self.excess(check, slack, case);
    }

    pub(crate) fn excess(&mut self, check: &str, slack: f64, case: impl FnOnce() -> CaseRecord) {
        let slack = if slack.is_nan() { f64::MAX } else { slack };
        if slack > self.allowed {
            self.violations += 1;
        }
        let key = format!("max_slack[{check}]");
        let entry = self.maxima.entry(key).or_insert(f64::NEG_INFINITY);
        if slack > *entry {
            *entry = slack;
        }
        if slack > self.max_slack {
            self.max_slack = slack;
            self.worst = Some(case());
        }
    }

    pub(crate) fn record_max(&mut self, name: &str, value: f64) {
        let entry = self.maxima.entry(name.to_string()).or_insert(f64::NEG_INFINITY);
        if value > *entry {
            *entry = value;
        }
    }

    pub(crate) fn merge(mut self, other: Tally) -> Tally {
        self.samples += other.samples;
        self.violations += other.violations;
        if other.max_slack > self.max_slack {
            self.max_slack = other.max_slack;
            self.worst = other.worst;
        }
        for (k, v) in other.maxima {
            let entry = self.maxima.entry(k).or_insert(f64::NEG_INFINITY);
            if v > *entry {
                *entry = v;
            }
        }
        self
    }

    pub(crate) fn into_report(self, lemma_id: impl Into<String>) -> CheckReport {
        let max_slack = if self.max_slack.is_finite() { self.max_slack } else { 0.0 };
        CheckReport {
            lemma_id: lemma_id.into(),
            samples_run: self.samples,
            violations: self.violations,
            max_slack,
            worst_case: self.worst,
            metrics: self.maxima.into_iter().filter(|(_, v)| v.is_finite()).collect(),
        }
    }
}

/// Runs `body(rng, sample_index, tally)` for every sample, in parallel
/// over fixed chunks.
pub(crate) fn sampled<F>(nsamples: u64, seed: u64, allowed: f64, body: F) -> Tally
where
    F: Fn(&mut SampleRng, u64, &mut Tally) + Sync,
{
    let parts: Vec<_> = chunks(nsamples as usize, CHUNK).collect();
    let tallies: Vec<Tally> = parts
        .into_par_iter()
        .map(|(c, range)| {
            let mut rng = chunk_rng(seed, c);
            let mut t = Tally::new(allowed);
            for i in range {
                body(&mut rng, i as u64, &mut t);
            }
            t
        })
        .collect();
    tallies.into_iter().fold(Tally::new(allowed), Tally::merge)
}

/// Momentum with a log-uniform length scale in `[lo, hi]`.
pub(crate) fn scaled_gaussian(rng: &mut SampleRng, lo: f64, hi: f64) -> Vec3 {
    let t: f64 = rng.random();
    let scale = lo * (hi / lo).powf(t);
    gaussian_vec(rng, scale)
}

/// Sample momentum at scale factor `r`: half the draws on an absolute
/// scale, half on a scale proportional to `r`, and with `heavy` a quarter
/// replaced by capped Cauchy-scaled draws.
pub(crate) fn sample_momentum(rng: &mut SampleRng, r: f64, heavy: bool) -> Vec3 {
    let x: f64 = rng.random();
    if heavy && x < 0.25 {
        heavy_tail_vec(rng, 1e3 * r)
    } else if x < 0.625 {
        scaled_gaussian(rng, 0.01, 100.0)
    } else {
        r * scaled_gaussian(rng, 0.01, 30.0)
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn fit_exponent(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(invalid("exponent fit needs at least two paired points"));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(invalid("exponent fit needs positive finite data"));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(invalid("exponent fit needs distinct abscissae"));
    }
    Ok(sxy / sxx)
}

/// Largest relative deviation of `values` from their median.
pub fn spread_about_median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    let median = if sorted.len().is_multiple_of(2) { 0.5 * (sorted[mid - 1] + sorted[mid]) } else { sorted[mid] };
    values.iter().map(|v| (v / median - 1.0).abs()).fold(0.0, f64::max)
}

/// Verification suites selectable from the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Suite {
    All,
    L2_1,
    L2_2,
    L2_3,
    L3_1,
    L3_2,
    L3_3,
    Jacobians,
    Omega,
}

impl Suite {
    pub const NAMES: [&'static str; 9] = ["all", "L2_1", "L2_2", "L2_3", "L3_1", "L3_2", "L3_3", "jacobians", "omega"];
}

impl std::str::FromStr for Suite {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "all" => Suite::All,
            "L2_1" => Suite::L2_1,
            "L2_2" => Suite::L2_2,
            "L2_3" => Suite::L2_3,
            "L3_1" => Suite::L3_1,
            "L3_2" => Suite::L3_2,
            "L3_3" => Suite::L3_3,
            "jacobians" => Suite::Jacobians,
            "omega" => Suite::Omega,
            other => return Err(invalid(format!("unknown suite `{other}` (one of {})", Suite::NAMES.join(", ")))),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteOptions {
    /// Overrides the per-check sample count of the sampled checks.
    pub samples: Option<u64>,
    pub seed: u64,
    /// Cutoff constants `B` for the energy-defect check.
    pub cutoffs: Vec<f64>,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self { samples: None, seed: 0, cutoffs: vec![0.1, 1.0, 10.0] }
    }
}

pub const DEFAULT_SAMPLES: u64 = 1_000_000;
pub const DEFAULT_FD_SAMPLES: u64 = 10_000;
pub const DEFAULT_JACOBIAN_SAMPLES: u64 = 100_000;
pub const L2_3_ALPHAS: [f64; 7] = [0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 2.9];
pub const L3_3_BETAS: [f64; 7] = [0.0, 0.5, 1.0, 2.0, 3.0, 3.5, 3.9];
pub const JACOBIAN_R_LIST: [f64; 3] = [1.0, 10.0, 100.0];
pub const INTEGRAL_R_LIST: [f64; 4] = [1.0, 4.0, 16.0, 64.0];

pub fn run_suite(suite: Suite, opts: &SuiteOptions) -> Result<Vec<CheckReport>> {
    let n = opts.samples.unwrap_or(DEFAULT_SAMPLES);
    let seed = opts.seed;
    let mut out = Vec::new();
    let want = |s: Suite| suite == Suite::All || suite == s;
    if want(Suite::L2_1) {
        out.push(verify_inequalities(LemmaId::L2_1, n, seed)?);
    }
    if want(Suite::L2_2) {
        let nfd = opts.samples.unwrap_or(DEFAULT_FD_SAMPLES);
        out.push(verify_derivative_identities(nfd, seed)?);
        out.push(verify_inequalities(LemmaId::L2_2Bounds, n, seed)?);
    }
    if want(Suite::L2_3) {
        for alpha in L2_3_ALPHAS {
            out.push(verify_integral_bounds(IntegralCheck::L2_3 { alpha }, IntegralGrid::default(), &[1.0])?.report);
        }
    }
    if want(Suite::L3_1) {
        for &b in &opts.cutoffs {
            out.push(verify_cutoff_defect(b, n, seed)?);
        }
    }
    if want(Suite::L3_2) {
        out.push(verify_trivial_integral()?);
    }
    if want(Suite::L3_3) {
        for beta in L3_3_BETAS {
            out.push(
                verify_integral_bounds(IntegralCheck::L3_3 { beta }, IntegralGrid::default(), &INTEGRAL_R_LIST)?.report,
            );
        }
    }
    if want(Suite::Jacobians) {
        let nj = opts.samples.unwrap_or(DEFAULT_JACOBIAN_SAMPLES);
        out.extend(verify_jacobian_bounds(nj, seed, &JACOBIAN_R_LIST)?.reports);
    }
    if want(Suite::Omega) {
        out.push(verify_inequalities(LemmaId::OmegaRelation, n, seed)?);
    }
    Ok(out)
}
