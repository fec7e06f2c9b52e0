//! Closed-form `v`-derivatives of the pair scalars and their
//! finite-difference oracle.

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use super::{sampled, scaled_gaussian, CaseRecord, CheckReport, R_LIST};
use crate::error::{Error, Result};
use crate::kinematics::{check_scale, lift_raw, CollisionPair};
use crate::momentum::{Momentum3, UnitVector, Vec3};
use crate::sampling::{chunk_rng, unit_vec, SampleRng};

/// Thresholds of the preconditions on `g`, `|n|` and `r²`.
pub const SINGULAR_EPS: f64 = 1e-10;

/// Step of the central-difference oracle, in units of `R`.
pub const FD_STEP: f64 = 1e-5;

/// Relative agreement required between closed forms and the oracle.
pub const FD_TOL: f64 = 1e-6;

/// `∂/∂v^i` of `v⁰`, `g`, `√s`, `r = √((n⁰)² − R⁻²(n·ω)²)` and of the
/// projection `(n·ω)n/|n|²`. Row `i` of `d_projection` is the derivative
/// with respect to `v^i`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Derivatives {
    pub d_v0: Vec3,
    pub d_g: Vec3,
    pub d_sqrt_s: Vec3,
    pub d_r: Vec3,
    pub d_projection: Matrix3<f64>,
}

pub fn analytic_derivatives(v: &Momentum3, u: &Momentum3, omega: &UnitVector, r: f64) -> Result<Derivatives> {
    check_scale(r)?;
    let p = CollisionPair::from_vecs(*v.vec(), *u.vec(), r)?;
    derivatives_of(&p, omega.vec())
}

pub(crate) fn derivatives_of(p: &CollisionPair, w: &Vec3) -> Result<Derivatives> {
    let r = p.r;
    if p.g <= SINGULAR_EPS {
        return Err(Error::NearSingular(format!("g = {:e} at or below {SINGULAR_EPS:e}", p.g)));
    }
    let n_norm = p.nn.sqrt();
    if n_norm <= SINGULAR_EPS {
        return Err(Error::NearSingular(format!("|n| = {n_norm:e} at or below {SINGULAR_EPS:e}")));
    }
    let nw = p.n.dot(w);
    let rr2 = p.n0 * p.n0 - nw * nw / (r * r);
    if rr2 <= SINGULAR_EPS {
        return Err(Error::NearSingular(format!("r² = {rr2:e} at or below {SINGULAR_EPS:e}")));
    }
    let rr = rr2.sqrt();
    let diff = p.v / (r * p.v0) - p.u / (r * p.u0);
    let nn = p.nn;
    let d_projection =
        (w * p.n.transpose() + nw * Matrix3::identity()) / nn - (2.0 * nw / (nn * nn)) * (p.n * p.n.transpose());
    Ok(Derivatives {
        d_v0: p.v / (r * r * p.v0),
        d_g: (p.u0 / (r * p.g)) * diff,
        d_sqrt_s: (p.u0 / (r * p.sqrt_s)) * diff,
        d_r: (p.n0 / p.v0 * p.v - nw * w) / (r * r * rr),
        d_projection,
    })
}

/// The differentiated quantities as plain functions of `v`, for the oracle.
fn quantities(v: &Vec3, u: &Vec3, w: &Vec3, r: f64) -> (f64, f64, f64, f64, Vec3) {
    let p = CollisionPair::from_vecs(*v, *u, r).expect("oracle inputs are on shell");
    let nw = p.n.dot(w);
    let rr = (p.n0 * p.n0 - nw * nw / (r * r)).sqrt();
    (lift_raw(v, r), p.g, p.sqrt_s, rr, (nw / p.nn) * p.n)
}

/// Central differences of all five quantities with step `h`.
pub(crate) fn fd_derivatives(v: &Vec3, u: &Vec3, w: &Vec3, r: f64, h: f64) -> Derivatives {
    let mut d = Derivatives {
        d_v0: Vec3::zeros(),
        d_g: Vec3::zeros(),
        d_sqrt_s: Vec3::zeros(),
        d_r: Vec3::zeros(),
        d_projection: Matrix3::zeros(),
    };
    for i in 0..3 {
        let mut vp = *v;
        let mut vm = *v;
        vp[i] += h;
        vm[i] -= h;
        let a = quantities(&vp, u, w, r);
        let b = quantities(&vm, u, w, r);
        let inv = 1.0 / (2.0 * h);
        d.d_v0[i] = (a.0 - b.0) * inv;
        d.d_g[i] = (a.1 - b.1) * inv;
        d.d_sqrt_s[i] = (a.2 - b.2) * inv;
        d.d_r[i] = (a.3 - b.3) * inv;
        let row = (a.4 - b.4) * inv;
        d.d_projection.set_row(i, &row.transpose());
    }
    d
}

fn relative_errors(a: &Derivatives, b: &Derivatives) -> [(&'static str, f64); 5] {
    fn rel(x: f64, y: f64, diff: f64) -> f64 {
        let scale = x.max(y);
        if scale == 0.0 {
            0.0
        } else {
            diff / scale
        }
    }
    [
        ("d_v0", rel(a.d_v0.norm(), b.d_v0.norm(), (a.d_v0 - b.d_v0).norm())),
        ("d_g", rel(a.d_g.norm(), b.d_g.norm(), (a.d_g - b.d_g).norm())),
        ("d_sqrt_s", rel(a.d_sqrt_s.norm(), b.d_sqrt_s.norm(), (a.d_sqrt_s - b.d_sqrt_s).norm())),
        ("d_r", rel(a.d_r.norm(), b.d_r.norm(), (a.d_r - b.d_r).norm())),
        ("d_projection", rel(a.d_projection.norm(), b.d_projection.norm(), (a.d_projection - b.d_projection).norm())),
    ]
}

/// A regular sample: `g ≥ 0.05` and `|n| ≥ 0.05R`, momenta on the scale `R`.
pub(crate) fn regular_sample(rng: &mut SampleRng, r: f64) -> CollisionPair {
    loop {
        let v = r * scaled_gaussian(rng, 0.1, 10.0);
        let u = r * scaled_gaussian(rng, 0.1, 10.0);
        if let Ok(p) = CollisionPair::from_vecs(v, u, r) {
            if p.g >= 0.05 && p.nn.sqrt() >= 0.05 * r {
                return p;
            }
        }
    }
}

/// Closed forms against central differences with step `FD_STEP·R` on
/// `nsamples` regular samples. The `fd_order` metric is the median
/// observed convergence order of the `d_g` error at `R = 1` between steps
/// `1e-2` and `5e-3`.
pub fn verify_derivative_identities(nsamples: u64, seed: u64) -> Result<CheckReport> {
    let tally = sampled(nsamples, seed, FD_TOL, |rng, i, t| {
        let r = R_LIST[(i % R_LIST.len() as u64) as usize];
        let p = regular_sample(rng, r);
        let w = unit_vec(rng);
        t.sample();
        let Ok(exact) = derivatives_of(&p, &w) else {
            return;
        };
        let fd = fd_derivatives(&p.v, &p.u, &w, r, FD_STEP * r);
        for (name, err) in relative_errors(&exact, &fd) {
            t.excess(name, err, || {
                CaseRecord::new(name).with_vec("v", &p.v).with_vec("u", &p.u).with_vec("omega", &w).with("R", &[r])
            });
        }
    });
    let mut report = tally.into_report("L2_2_identities");
    report.metrics.insert("fd_order".into(), fd_order(seed));
    Ok(report)
}

fn fd_order(seed: u64) -> f64 {
    let mut rng = chunk_rng(seed ^ 0x5eed_0fd0, 0);
    let mut orders = Vec::new();
    for _ in 0..200 {
        let p = regular_sample(&mut rng, 1.0);
        let w = unit_vec(&mut rng);
        let Ok(exact) = derivatives_of(&p, &w) else { continue };
        let e1 = (fd_derivatives(&p.v, &p.u, &w, 1.0, 1e-2).d_g - exact.d_g).norm();
        let e2 = (fd_derivatives(&p.v, &p.u, &w, 1.0, 5e-3).d_g - exact.d_g).norm();
        if e1 > 0.0 && e2 > 0.0 {
            orders.push((e1 / e2).log2());
        }
    }
    orders.sort_by(f64::total_cmp);
    orders.get(orders.len() / 2).copied().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn m(x: f64, y: f64, z: f64) -> Momentum3 {
        Momentum3::new(x, y, z).unwrap()
    }

    #[test]
    fn energy_derivative_example() {
        let w = UnitVector::new(Vec3::new(0.0, 0.0, 1.0)).unwrap();
        let d = analytic_derivatives(&m(1.0, 0.0, 0.0), &m(0.0, 1.0, 0.0), &w, 1.0).unwrap();
        assert_relative_eq!(d.d_v0, Vec3::new(1.0 / 2f64.sqrt(), 0.0, 0.0), epsilon = 1e-15);
    }

    #[test]
    fn coincident_momenta_are_singular() {
        let w = UnitVector::new(Vec3::new(0.0, 0.0, 1.0)).unwrap();
        let v = m(0.3, -0.2, 1.0);
        assert!(matches!(analytic_derivatives(&v, &v, &w, 2.0), Err(Error::NearSingular(_))));
        let minus = m(-0.3, 0.2, -1.0);
        assert!(matches!(analytic_derivatives(&v, &minus, &w, 2.0), Err(Error::NearSingular(_))));
    }

    #[test]
    fn closed_forms_match_differences() {
        let report = verify_derivative_identities(2000, 3).unwrap();
        assert_eq!(report.violations, 0, "{report:?}");
        assert!(report.max_slack < FD_TOL);
    }

    #[test]
    fn oracle_converges_at_second_order() {
        let order = fd_order(9);
        assert!((order - 2.0).abs() < 0.1, "order {order}");
    }

    #[test]
    fn radius_derivative_reduces_to_sqrt_s_along_n() {
        // With ω ∥ n the normalization r equals √s.
        let v = Vec3::new(0.4, 1.1, -0.3);
        let u = Vec3::new(-0.2, 0.5, 0.9);
        let p = CollisionPair::from_vecs(v, u, 1.5).unwrap();
        let w = p.n / p.nn.sqrt();
        let d = derivatives_of(&p, &w).unwrap();
        assert_relative_eq!(p.r_omega(&w), p.sqrt_s, max_relative = 1e-12);
        assert_relative_eq!(d.d_r, d.d_sqrt_s, max_relative = 1e-10);
    }
}
