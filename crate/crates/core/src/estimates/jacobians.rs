//! Finite-difference Jacobians `∂v'^k/∂v^i` of both parametrizations and
//! the fitted constants of their bounds.
//!
//! Momenta are drawn on the scale `R` (`v = R·ṽ` with `ṽ` from a fixed
//! distribution), the natural scale of the case split `|v| ≶ R`.

use std::collections::BTreeMap;

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use super::{sampled, scaled_gaussian, spread_about_median, CaseRecord, CheckReport, Tally};
use crate::error::{invalid, Result};
use crate::kinematics::{CollisionPair, Representation};
use crate::momentum::Vec3;
use crate::sampling::{chunk_rng, unit_vec};

/// Difference step in units of `R`.
pub const JACOBIAN_STEP: f64 = 1e-5;

/// Allowed relative spread of a fitted constant across scale factors.
pub const STABILITY_TOL: f64 = 0.3;

/// Allowed growth of the Case-3 Jacobian when `|v|` doubles.
pub const GROWTH_TOL: f64 = 1.1;

/// Samples with `|v − u|` (and for the RS bound `|v + u|`) below this are
/// excluded from the fits.
pub const PAIR_EXCLUSION: f64 = 0.1;

const GROWTH_SAMPLES: u64 = 500;

/// `J[(k, i)] = ∂v'^k/∂v^i` by central differences at fixed `ω`
/// (respectively `ω̂`).
pub fn fd_jacobian(v: &Vec3, u: &Vec3, w: &Vec3, r: f64, rep: Representation, h: f64) -> Result<Matrix3<f64>> {
    let post = |v: Vec3| -> Result<Vec3> {
        let p = CollisionPair::from_vecs(v, *u, r)?;
        Ok(match rep {
            Representation::OmegaR => p.post_omega_r_raw(w).0,
            Representation::OmegaRS => p.post_omega_rs_raw(w).0,
        })
    };
    let mut j = Matrix3::zeros();
    for i in 0..3 {
        let mut vp = *v;
        let mut vm = *v;
        vp[i] += h;
        vm[i] -= h;
        let col = (post(vp)? - post(vm)?) / (2.0 * h);
        j.set_column(i, &col);
    }
    Ok(j)
}

fn max_entry(m: &Matrix3<f64>) -> f64 {
    m.iter().fold(0.0, |a, x| a.max(x.abs()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JacobianStudy {
    pub reports: Vec<CheckReport>,
    /// Fitted constants keyed by bound name, one `(R, C)` entry per scale factor.
    pub constants: BTreeMap<String, Vec<(f64, f64)>>,
    /// Per scale factor, the largest ratio `max_J(2L)/max_J(L)` of the
    /// Case-3 RS Jacobian at `|v| = L ∈ {10R, 20R}`, `|u| = 1`.
    pub growth: Vec<(f64, f64)>,
}

const BOUNDS: [&str; 5] = ["L3_4", "L3_5", "case1", "case2", "case3"];

fn key(bound: &str, r: f64) -> String {
    format!("C_{bound}[R={r}]")
}

/// Fits the constants of `|∂v'| ≤ C v⁰(u⁰)⁴` (Ω_R), of the three-term RS
/// bound, and of the three case corollaries, separately for each `R` in
/// `r_list`, and measures Case-3 growth in `|v|`. Violations: a constant
/// whose spread across `R` exceeds [`STABILITY_TOL`], or growth above
/// [`GROWTH_TOL`].
pub fn verify_jacobian_bounds(nsamples: u64, seed: u64, r_list: &[f64]) -> Result<JacobianStudy> {
    if r_list.is_empty() || r_list.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(invalid("need a nonempty list of positive scale factors"));
    }
    let nr = r_list.len() as u64;
    let tally = sampled(nsamples, seed, f64::INFINITY, |rng, i, t| {
        let r = r_list[(i % nr) as usize];
        let v = r * scaled_gaussian(rng, 0.05, 20.0);
        let u = r * scaled_gaussian(rng, 0.05, 20.0);
        let w = unit_vec(rng);
        t.sample();
        fit_sample(&v, &u, &w, r, t);
    });

    let mut constants = BTreeMap::new();
    let mut spreads = BTreeMap::new();
    for bound in BOUNDS {
        let per_r: Vec<(f64, f64)> =
            r_list.iter().filter_map(|&r| tally_max(&tally, &key(bound, r)).map(|c| (r, c))).collect();
        let values: Vec<f64> = per_r.iter().map(|(_, c)| *c).collect();
        spreads.insert(bound, if values.len() == r_list.len() { spread_about_median(&values) } else { f64::INFINITY });
        constants.insert(bound.to_string(), per_r);
    }

    let growth: Vec<(f64, f64)> = r_list.iter().map(|&r| Ok((r, case3_growth(seed, r)?))).collect::<Result<_>>()?;

    let stability_report = |bounds: &[&str]| {
        let mut t = Tally::new(0.0);
        for _ in 0..nsamples {
            t.sample();
        }
        let mut report_metrics = BTreeMap::new();
        for b in bounds {
            let spread = spreads[b];
            t.excess(&format!("{b} spread"), spread - STABILITY_TOL, || {
                let cs: Vec<f64> = constants[*b].iter().map(|(_, c)| *c).collect();
                CaseRecord::new(format!("{b} spread")).with("R", r_list).with("C", &cs)
            });
            for (r, c) in &constants[*b] {
                report_metrics.insert(key(b, *r), *c);
            }
            report_metrics.insert(format!("spread_{b}"), spread);
        }
        (t, report_metrics)
    };

    let mut reports = Vec::new();
    for (id, bounds) in [("L3_4", &["L3_4"][..]), ("L3_5", &["L3_5"][..]), ("cases", &["case1", "case2", "case3"][..])]
    {
        let (mut t, extra) = stability_report(bounds);
        if id == "cases" {
            for &(r, ratio) in &growth {
                t.excess(&format!("case3 growth R={r}"), ratio - GROWTH_TOL, || {
                    CaseRecord::new("case3 growth").with("R", &[r]).with("ratio", &[ratio])
                });
            }
        }
        let mut report = t.into_report(id);
        report.metrics.retain(|k, _| !k.starts_with("max_slack"));
        report.metrics.extend(extra);
        if id == "cases" {
            for &(r, ratio) in &growth {
                report.metrics.insert(format!("case3_growth[R={r}]"), ratio);
            }
        }
        reports.push(report);
    }
    Ok(JacobianStudy { reports, constants, growth })
}

fn tally_max(t: &Tally, name: &str) -> Option<f64> {
    t.maxima.get(name).copied().filter(|v| v.is_finite())
}

fn fit_sample(v: &Vec3, u: &Vec3, w: &Vec3, r: f64, t: &mut Tally) {
    let d = (v - u).norm();
    if d <= PAIR_EXCLUSION {
        return;
    }
    let Ok(p) = CollisionPair::from_vecs(*v, *u, r) else { return };
    let (vn, un) = (v.norm(), u.norm());
    let u0_3 = p.u0.powi(3);
    if let Ok(j) = fd_jacobian(v, u, w, r, Representation::OmegaR, JACOBIAN_STEP * r) {
        let jm = max_entry(&j);
        t.record_max(&key("L3_4", r), jm / (p.v0 * p.u0.powi(4)));
        if vn <= r {
            t.record_max(&key("case1", r), jm / p.u0.powi(4));
        } else if vn <= 2.0 * un {
            t.record_max(&key("case2", r), jm / p.u0.powi(5));
        }
    }
    let sum = (v + u).norm();
    if let Ok(j) = fd_jacobian(v, u, w, r, Representation::OmegaRS, JACOBIAN_STEP * r) {
        let jm = max_entry(&j);
        if sum >= PAIR_EXCLUSION {
            let shape = r * p.v0 / d + r * p.v0 / sum + (r * p.v0 / d).powi(2);
            t.record_max(&key("L3_5", r), jm / (shape * u0_3));
        }
        if vn >= r && vn >= 2.0 * un {
            t.record_max(&key("case3", r), jm / u0_3);
        }
    }
}

/// Largest `max_J(2L)/max_J(L)` over `L ∈ {10R, 20R}` for the RS Jacobian
/// with `|u| = 1` and random directions.
fn case3_growth(seed: u64, r: f64) -> Result<f64> {
    let mut rng = chunk_rng(seed ^ 0x0ca5_e300, r.to_bits());
    let samples: Vec<(Vec3, Vec3, Vec3)> =
        (0..GROWTH_SAMPLES).map(|_| (unit_vec(&mut rng), unit_vec(&mut rng), unit_vec(&mut rng))).collect();
    let sup_at = |len: f64| -> Result<f64> {
        let mut best: f64 = 0.0;
        for (vh, u, w) in &samples {
            let j = fd_jacobian(&(len * vh), u, w, r, Representation::OmegaRS, JACOBIAN_STEP * r)?;
            best = best.max(max_entry(&j));
        }
        Ok(best)
    };
    let m = [sup_at(10.0 * r)?, sup_at(20.0 * r)?, sup_at(40.0 * r)?];
    Ok((m[1] / m[0]).max(m[2] / m[1]))
}
