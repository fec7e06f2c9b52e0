//! Sampled checks of the pointwise inequalities: the elementary estimates,
//! the derivative bounds, the energy-defect bound on S²_R and the relation
//! between `ω` and `ω̂`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::derivatives::derivatives_of;
use super::{sample_momentum, sampled, CaseRecord, CheckReport, Tally, R_LIST, SLACK};
use crate::error::{invalid, Result};
use crate::kinematics::CollisionPair;
use crate::momentum::Vec3;
use crate::sampling::{unit_vec, SampleRng};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum LemmaId {
    /// The elementary estimates of the pair scalars.
    L2_1,
    /// The inequality parts of the derivative formulas.
    L2_2Bounds,
    /// Energy defect `≤ B` on S²_R, both representations.
    L3_1 { cutoff: f64 },
    /// `n·ω` and `n·ω̂` share a sign and `|n·ω̂| ≤ |n·ω|`.
    OmegaRelation,
}

impl LemmaId {
    pub fn name(&self) -> String {
        match self {
            LemmaId::L2_1 => "L2_1".into(),
            LemmaId::L2_2Bounds => "L2_2_bounds".into(),
            LemmaId::L3_1 { cutoff } => format!("L3_1(B={cutoff})"),
            LemmaId::OmegaRelation => "Omega_relation".into(),
        }
    }
}

pub fn verify_inequalities(lemma: LemmaId, nsamples: u64, seed: u64) -> Result<CheckReport> {
    let tally = match lemma {
        LemmaId::L2_1 => sampled(nsamples, seed, SLACK, |rng, i, t| {
            let (p, w) = sample_triple(rng, i, true);
            t.sample();
            elementary(&p, &w, t);
        }),
        LemmaId::L2_2Bounds => sampled(nsamples, seed, SLACK, |rng, i, t| {
            let (p, w) = sample_triple(rng, i, true);
            t.sample();
            derivative_bounds(&p, &w, t);
        }),
        LemmaId::L3_1 { cutoff } => {
            if !(cutoff >= 0.0 && cutoff.is_finite()) {
                return Err(invalid(format!("cutoff constant must be nonnegative, got {cutoff}")));
            }
            sampled(nsamples, seed, SLACK, |rng, i, t| {
                let (p, _) = sample_triple(rng, i, false);
                let w = sample_in_cutoff_set(rng, &p, cutoff);
                t.sample();
                defect_bound(&p, &w, cutoff, t);
            })
        }
        LemmaId::OmegaRelation => sampled(nsamples, seed, SLACK, |rng, i, t| {
            let (p, w) = sample_triple(rng, i, true);
            t.sample();
            omega_relation(&p, &w, t);
        }),
    };
    Ok(tally.into_report(lemma.name()))
}

/// Energy-defect check on S²_R for cutoff constant `b`.
pub fn verify_cutoff_defect(b: f64, nsamples: u64, seed: u64) -> Result<CheckReport> {
    verify_inequalities(LemmaId::L3_1 { cutoff: b }, nsamples, seed)
}

/// Sample `i` uses `R = R_LIST[i mod 4]`. A few percent of the draws are
/// placed on the edges `u = v`, `u = −v` and `ω ∥ n`.
fn sample_triple(rng: &mut SampleRng, i: u64, heavy: bool) -> (CollisionPair, Vec3) {
    let r = R_LIST[(i % R_LIST.len() as u64) as usize];
    loop {
        let v = sample_momentum(rng, r, heavy);
        let x: f64 = rng.random();
        let u = if x < 0.03 {
            v
        } else if x < 0.06 {
            -v
        } else {
            sample_momentum(rng, r, heavy)
        };
        let Ok(p) = CollisionPair::from_vecs(v, u, r) else { continue };
        let mut w = unit_vec(rng);
        let nn = p.nn.sqrt();
        if rng.random::<f64>() < 0.1 && nn > 0.0 {
            w = if rng.random::<bool>() { p.n / nn } else { -p.n / nn };
        }
        return (p, w);
    }
}

fn case(p: &CollisionPair, w: &Vec3, check: &str) -> CaseRecord {
    CaseRecord::new(check).with_vec("v", &p.v).with_vec("u", &p.u).with_vec("omega", w).with("R", &[p.r])
}

fn le(t: &mut Tally, p: &CollisionPair, w: &Vec3, check: &str, lhs: f64, rhs: f64) {
    t.le(check, lhs, rhs, lhs.abs().max(rhs.abs()), || case(p, w, check));
}

fn elementary(p: &CollisionPair, w: &Vec3, t: &mut Tally) {
    let r = p.r;
    let v0u0 = p.v0 * p.u0;
    let d = (p.v - p.u).norm();
    let s_direct = p.n0 * p.n0 - p.nn / (r * r);
    t.eq("s=4+g^2", s_direct, p.s, || case(p, w, "s=4+g^2"));
    le(t, p, w, "2<=sqrt(s)", 2.0, p.sqrt_s);
    le(t, p, w, "g<=sqrt(s)", p.g, p.sqrt_s);
    le(t, p, w, "sqrt(s)<=2sqrt(v0u0)", p.sqrt_s, 2.0 * v0u0.sqrt());
    le(t, p, w, "|v-u|/sqrt(v0u0)<=Rg", d / v0u0.sqrt(), r * p.g);
    le(t, p, w, "Rg<=|v-u|", r * p.g, d);
    le(t, p, w, "|v|<=Rv0", p.v.norm(), r * p.v0);
    le(t, p, w, "v0<=sqrt(1+|v|^2)", p.v0, (1.0 + p.v.norm_squared()).sqrt());
    if d > 1e-12 && p.nn.sqrt() > 1e-12 {
        let nd = p.n.dot(&(p.v - p.u));
        let x = nd * nd / (r * r * p.n0 * p.n0 * p.d2);
        let rhs = d * (1.0 - x).max(0.0).sqrt();
        t.eq("Rg=|v-u|sqrt(1-cos)", r * p.g, rhs, || case(p, w, "Rg=|v-u|sqrt(1-cos)"));
    }
    le(t, p, w, "sqrt(s)<=r(omega)", p.sqrt_s, p.r_omega(w));
    let ratio = (p.v0 / p.u0).max(p.u0 / p.v0).sqrt();
    le(t, p, w, "sqrt(s)>=sqrt(v0/u0)", ratio, p.sqrt_s);
}

fn derivative_bounds(p: &CollisionPair, w: &Vec3, t: &mut Tally) {
    let Ok(d) = derivatives_of(p, w) else { return };
    let r = p.r;
    let rr = p.r_omega(w);
    let flux = p.u0 * (p.v0 * p.u0).sqrt() / r;
    le(t, p, w, "|d v0|<=1/R", d.d_v0.norm(), 1.0 / r);
    le(t, p, w, "|d g|<=2u0/(Rg)", d.d_g.norm(), 2.0 * p.u0 / (r * p.g));
    le(t, p, w, "|d sqrt(s)|<=2u0/(R sqrt(s))", d.d_sqrt_s.norm(), 2.0 * p.u0 / (r * p.sqrt_s));
    le(t, p, w, "|d r|<=2(u0+v0)/(R r)", d.d_r.norm(), 2.0 * p.n0 / (r * rr));
    le(t, p, w, "|d g|<=u0sqrt(v0u0)/R", d.d_g.norm(), flux);
    le(t, p, w, "|d sqrt(s)|<=u0sqrt(v0u0)/R", d.d_sqrt_s.norm(), flux);
    le(t, p, w, "|d proj|<=3/|n|", d.d_projection.norm(), 3.0 / p.nn.sqrt());
}

/// Uniform sample of S²_R = {ω : |v−u|²|n×ω|²/(2R²s) ≤ b}, which is the
/// pair of polar caps `sin²∠(ω, n) ≤ 2R²s b/(|v−u|²|n|²)`.
pub(crate) fn sample_in_cutoff_set(rng: &mut SampleRng, p: &CollisionPair, b: f64) -> Vec3 {
    let denom = p.d2 * p.nn;
    let kappa = if denom > 0.0 { 2.0 * p.r * p.r * p.s * b / denom } else { f64::INFINITY };
    if kappa >= 1.0 {
        return unit_vec(rng);
    }
    let axis = p.n / p.nn.sqrt();
    let c_min = (1.0 - kappa).sqrt();
    let c = c_min + (1.0 - c_min) * rng.random::<f64>();
    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
    let phi = std::f64::consts::TAU * rng.random::<f64>();
    let helper = if axis.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let e1 = axis.cross(&helper).normalize();
    let e2 = axis.cross(&e1);
    let st = (1.0 - c * c).max(0.0).sqrt();
    let w = sign * c * axis + st * (phi.cos() * e1 + phi.sin() * e2);
    w / w.norm()
}

fn defect_bound(p: &CollisionPair, w: &Vec3, b: f64, t: &mut Tally) {
    let scale = p.v.norm_squared() + p.u.norm_squared() + b;
    let q = p.cutoff_quantity(w);
    let defect = |vp: Vec3| p.v.norm_squared() + p.u.norm_squared() - vp.norm_squared() - (p.n - vp).norm_squared();
    let (vr, _) = p.post_omega_r_raw(w);
    let (vs, _) = p.post_omega_rs_raw(w);
    for (rep, vp) in [("R", vr), ("RS", vs)] {
        let dq = defect(vp);
        let name_q = format!("defect<=q [{rep}]");
        let name_b = format!("defect<=B [{rep}]");
        t.le(&name_q, dq, q, scale, || case(p, w, &name_q));
        t.le(&name_b, dq, b, scale, || case(p, w, &name_b));
        t.record_max("max_defect", dq);
        t.record_max("max_defect_relative", dq / scale);
    }
}

fn omega_relation(p: &CollisionPair, w: &Vec3, t: &mut Tally) {
    let nn = p.nn.sqrt();
    if nn <= 1e-12 {
        return;
    }
    let wh = p.omega_hat_raw(w);
    let a = p.n.dot(w);
    let b = p.n.dot(&wh);
    t.le("|n.omega_hat|<=|n.omega|", b.abs(), a.abs(), nn, || case(p, w, "|n.omega_hat|<=|n.omega|"));
    t.excess("same sign", -(a * b) / (nn * nn), || case(p, w, "same sign"));
    t.eq("|omega_hat|=1", wh.norm(), 1.0, || case(p, w, "|omega_hat|=1"));
    t.record_max("max |omega_hat - omega|", (wh - w).norm());
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::chunk_rng;

    #[test]
    fn elementary_estimates_hold() {
        let r = verify_inequalities(LemmaId::L2_1, 40_000, 1).unwrap();
        assert_eq!(r.violations, 0, "{r:#?}");
        assert_eq!(r.samples_run, 40_000);
    }

    #[test]
    fn derivative_bounds_hold() {
        let r = verify_inequalities(LemmaId::L2_2Bounds, 40_000, 2).unwrap();
        assert_eq!(r.violations, 0, "{r:#?}");
    }

    #[test]
    fn defect_bounded_by_cutoff() {
        for b in [0.1, 1.0, 10.0] {
            let r = verify_cutoff_defect(b, 40_000, 3).unwrap();
            assert_eq!(r.violations, 0, "{r:#?}");
            assert!(r.metrics["max_defect"] <= b * (1.0 + 1e-9));
        }
    }

    #[test]
    fn zero_cutoff_leaves_only_the_axis() {
        let r = verify_cutoff_defect(0.0, 20_000, 4).unwrap();
        assert_eq!(r.violations, 0);
        assert!(r.metrics["max_defect_relative"] <= 1e-12, "{r:#?}");
        assert!(verify_cutoff_defect(-1.0, 10, 4).is_err());
    }

    #[test]
    fn omega_relation_holds() {
        let r = verify_inequalities(LemmaId::OmegaRelation, 40_000, 5).unwrap();
        assert_eq!(r.violations, 0, "{r:#?}");
    }

    #[test]
    fn cutoff_samples_lie_in_the_set() {
        let mut rng = chunk_rng(8, 0);
        for i in 0..5000 {
            let (p, _) = sample_triple(&mut rng, i, false);
            let w = sample_in_cutoff_set(&mut rng, &p, 0.5);
            assert!((w.norm() - 1.0).abs() < 1e-12);
            assert!(p.cutoff_quantity(&w) <= 0.5 * (1.0 + 1e-9) + 1e-12);
        }
    }

    #[test]
    fn corrupted_formula_is_caught() {
        // A weakened right-hand side must be detected.
        let mut t = Tally::new(SLACK);
        let mut rng = chunk_rng(6, 0);
        for i in 0..2000 {
            let (p, w) = sample_triple(&mut rng, i, false);
            le(&mut t, &p, &w, "broken", (p.v - p.u).norm(), 0.5 * p.r * p.g);
        }
        assert!(t.into_report("broken").violations > 0);
    }
}
