//! Closed-form values the implementation must reproduce.
//!
//! Tags: `[DERIVED]` worked out by hand from the definitions,
//! `[PAPER]` a statement of the underlying theory checked numerically,
//! `[TRIVIAL]` follows immediately from the construction.

use std::f64::consts::PI;

use approx::assert_relative_eq;
use rwb_core::collision::{CollisionOperator, QuadratureSpec, RepMode, UIntegration};
use rwb_core::cosmology::integrability;
use rwb_core::kinematics::{newtonian_post_collision, omega_hat_from_omega, post_collision};
use rwb_core::quadrature::{gauss_legendre, SphereRule};
use rwb_core::{
    AngularMode, CollisionPair, DistributionField, KernelParams, Momentum3, ReferenceKernel, Representation,
    ScaleFactorSpec, UnitVector, VGrid, Vec3,
};

fn m(x: f64, y: f64, z: f64) -> Momentum3 {
    Momentum3::new(x, y, z).unwrap()
}

fn unit(x: f64, y: f64, z: f64) -> UnitVector {
    UnitVector::normalize(Vec3::new(x, y, z)).unwrap()
}

/// [DERIVED] v = −u = e₁ at R = 1: v⁰ = √2, n = 0, g = 2, s = 8,
/// v_φ = 2√8/2 = 2√2, and v' = ω.
#[test]
fn head_on_pair() {
    let p = CollisionPair::from_vecs(Vec3::new(1.0, 0.0, 0.0), Vec3::new(-1.0, 0.0, 0.0), 1.0).unwrap();
    let s = p.scalars();
    assert_relative_eq!(s.v0, 2f64.sqrt(), epsilon = 1e-15);
    assert_relative_eq!(s.g, 2.0, epsilon = 1e-15);
    assert_relative_eq!(s.s, 8.0, epsilon = 1e-14);
    assert_relative_eq!(s.v_phi, 2.0 * 2f64.sqrt(), epsilon = 1e-14);
    for rep in Representation::ALL {
        let out = p.post(&unit(0.0, 0.6, 0.8), rep).unwrap();
        assert_relative_eq!(*out.v_prime.vec(), Vec3::new(0.0, 0.6, 0.8), epsilon = 1e-15);
        assert_relative_eq!(*out.u_prime.vec(), Vec3::new(0.0, -0.6, -0.8), epsilon = 1e-15);
    }
}

/// [DERIVED] With u = 0: g² = |v|²/R² − (v⁰ − 1)² = 2(v⁰ − 1), hence
/// s = 2(1 + v⁰).
#[test]
fn partner_at_rest() {
    for (a, r) in [(0.3, 1.0), (5.0, 2.0), (1e3, 7.0), (1e-4, 1.0)] {
        let p = CollisionPair::from_vecs(Vec3::new(0.0, a, 0.0), Vec3::zeros(), r).unwrap();
        let v0 = (1.0 + a * a / (r * r)).sqrt();
        assert_relative_eq!(p.g * p.g, 2.0 * (v0 - 1.0), max_relative = 1e-12);
        assert_relative_eq!(p.s, 2.0 * (1.0 + v0), max_relative = 1e-14);
    }
}

/// [TRIVIAL] Equal momenta: g = 0 and nothing moves.
#[test]
fn equal_momenta_do_not_scatter() {
    let v = m(0.4, -2.0, 1.0);
    for rep in Representation::ALL {
        let out = post_collision(&v, &v, &unit(1.0, 1.0, 0.0), 3.0, rep).unwrap();
        assert_eq!(out.v_prime, v);
        assert_eq!(out.u_prime, v);
    }
}

/// [PAPER] The Ω_R form tends to the Newtonian σ-representation as
/// R → ∞, with an O(R⁻²) error.
#[test]
fn newtonian_limit() {
    let (v, u, w) = (m(0.7, -0.2, 1.1), m(-0.4, 0.9, 0.3), unit(0.2, -0.5, 0.8));
    let (nv, _) = newtonian_post_collision(&v, &u, &w);
    let mut prev = f64::INFINITY;
    for r in [1e1, 1e2, 1e3] {
        let out = post_collision(&v, &u, &w, r, Representation::OmegaR).unwrap();
        let err = (out.v_prime.vec() - nv.vec()).norm();
        assert!(err < 5.0 / (r * r), "R = {r}: {err}");
        assert!(err < prev / 50.0);
        prev = err;
    }
}

/// [DERIVED] With n = v + u = 0 both forms coincide and ω̂ = ω.
#[test]
fn zero_total_momentum_maps_identity() {
    let (v, u, w) = (m(1.0, 2.0, -0.5), m(-1.0, -2.0, 0.5), unit(0.3, 0.4, 1.2));
    let hat = omega_hat_from_omega(&v, &u, &w, 1.5).unwrap();
    assert_relative_eq!(*hat.vec(), *w.vec(), epsilon = 1e-15);
}

/// [DERIVED] ω ∥ n gives |n × ω| = 0, inside every cutoff set.
#[test]
fn axis_is_in_cutoff_set() {
    let p = CollisionPair::from_vecs(Vec3::new(2.0, 1.0, 0.0), Vec3::new(1.0, 0.0, 3.0), 0.5).unwrap();
    let axis = p.n.normalize();
    assert!(p.cutoff_quantity(&axis) < 1e-14);
    assert!(p.cutoff_quantity(&Vec3::new(0.0, 1.0, 0.0)) > 0.0);
}

/// [DERIVED] Two-point Gauss–Legendre: nodes ±1/√3, unit weights.
#[test]
fn two_point_gauss_legendre() {
    let (x, w) = gauss_legendre(2).unwrap();
    assert_relative_eq!(x[1], 1.0 / 3f64.sqrt(), epsilon = 1e-15);
    assert_relative_eq!(x[0], -x[1]);
    assert_relative_eq!(w[0], 1.0, epsilon = 1e-15);
    assert_relative_eq!(w[1], 1.0, epsilon = 1e-15);
}

/// [DERIVED] ∫_{S²} 1 = 4π, ∫ z² = 4π/3, ∫ x²y² = 4π/15; the folded
/// rule agrees on these even integrands.
#[test]
fn sphere_rule_moments() {
    for rule in [SphereRule::product(6).unwrap(), SphereRule::folded(6).unwrap()] {
        let int = |f: &dyn Fn(&Vec3) -> f64| rule.nodes.iter().zip(&rule.weights).map(|(x, w)| w * f(x)).sum::<f64>();
        assert_relative_eq!(int(&|_| 1.0), 4.0 * PI, epsilon = 1e-13);
        assert_relative_eq!(int(&|x| x.z * x.z), 4.0 * PI / 3.0, epsilon = 1e-13);
        assert_relative_eq!(int(&|x| x.x * x.x * x.y * x.y), 4.0 * PI / 15.0, epsilon = 1e-13);
    }
}

/// [DERIVED] EdS, R = (1 + ct)^{2/3}: ∫₀^t R⁻³ = t/(1 + ct) and
/// ∫₀^t R^{-3/2} = ln(1 + ct)/c.
#[test]
fn eds_closed_form_integrals() {
    let c = 0.8;
    let eds = ScaleFactorSpec::EinsteinDeSitter { c };
    for t in [0.0, 0.3, 5.0, 1e4] {
        assert_relative_eq!(eds.integral_of_power(-3.0, t).unwrap(), t / (1.0 + c * t), max_relative = 1e-13);
        assert_relative_eq!(eds.integral_of_power(-1.5, t).unwrap(), (c * t).ln_1p() / c, max_relative = 1e-13);
    }
    assert_relative_eq!(eds.r(1.0).unwrap(), 1.8f64.powf(2.0 / 3.0), epsilon = 1e-15);
}

/// [DERIVED] R^{b−4} = (1+ct)^{2(b−4)/3} is integrable iff b < 5/2, and
/// for R ∝ t^q with q = 0.4 iff b < 4 − 1/q = 3/2.
#[test]
fn integrability_thresholds() {
    let eds = ScaleFactorSpec::EinsteinDeSitter { c: 1.0 };
    assert!(integrability(&eds, 2.45).unwrap().converges);
    assert!(!integrability(&eds, 2.55).unwrap().converges);
    let pl = ScaleFactorSpec::PowerLaw { c: 1.0, q: 0.4 };
    assert!(integrability(&pl, 1.45).unwrap().converges);
    assert!(!integrability(&pl, 1.55).unwrap().converges);
    // R⁻³ alone fails for q ≤ 1/3.
    assert!(!integrability(&ScaleFactorSpec::PowerLaw { c: 1.0, q: 0.3 }, 0.0).unwrap().converges);
    assert!(!integrability(&ScaleFactorSpec::Static { r0: 2.0 }, 1.0).unwrap().converges);
}

/// [DERIVED] ∫ e^{−w|v|²} dv = (π/w)^{3/2}; the trapezoid rule is
/// spectrally accurate for a Gaussian well inside the box.
#[test]
fn gaussian_mass() {
    let grid = VGrid::new(5.0, 41).unwrap();
    let (f, _) = DistributionField::gaussian_initial_data(0.5, 2.0, grid).unwrap();
    assert_relative_eq!(f.mass(), 0.5 * (PI / 2.0).powf(1.5), max_relative = 1e-10);
    let mo = f.moments(1.0);
    assert!(mo.momentum.iter().all(|p| p.abs() < 1e-15));
}

/// [TRIVIAL] Trilinear interpolation is exact for affine data inside the
/// box and zero outside.
#[test]
fn interpolation_of_affine_data() {
    let grid = VGrid::new(2.0, 9).unwrap();
    let affine = |v: &Vec3| 1.0 + 0.5 * v.x - 0.25 * v.y + 2.0 * v.z;
    let f = DistributionField::from_fn(grid, affine);
    for v in [Vec3::new(0.1, -1.3, 1.7), Vec3::new(-2.0, 2.0, 0.0), Vec3::new(1.99, 0.01, -0.77)] {
        assert_relative_eq!(f.interpolate_vec(&v), affine(&v), epsilon = 1e-13);
    }
    assert_eq!(f.interpolate_vec(&Vec3::new(2.5, 0.0, 0.0)), 0.0);
}

/// [TRIVIAL] Q(0, 0) = 0.
#[test]
fn zero_field_has_zero_collisions() {
    let grid = VGrid::new(3.0, 8).unwrap();
    let kernel = KernelParams::new(1.0, 1.0, 1.0, 1.0, AngularMode::SharpCutoff).unwrap();
    let op = CollisionOperator::new(
        ReferenceKernel::new(kernel),
        QuadratureSpec::new(6, UIntegration::ReuseGrid),
        RepMode::OmegaR,
    )
    .unwrap();
    let q = op.field(&DistributionField::zeros(grid), 1.0).unwrap();
    assert!(q.iter().all(|x| *x == 0.0));
}

/// [TRIVIAL] Sharp weight is the indicator of the cutoff set; the smooth
/// one vanishes at B and is 1 below B − width.
#[test]
fn cutoff_weights() {
    let sharp = KernelParams::new(1.0, 1.0, 1.0, 2.0, AngularMode::SharpCutoff).unwrap();
    assert_eq!(sharp.cutoff_weight(2.0), 1.0);
    assert_eq!(sharp.cutoff_weight(2.0 + 1e-12), 0.0);
    let smooth = KernelParams::new(1.0, 1.0, 1.0, 2.0, AngularMode::SmoothCutoff { width: 0.5 }).unwrap();
    assert_eq!(smooth.cutoff_weight(1.5), 1.0);
    assert_eq!(smooth.cutoff_weight(2.0), 0.0);
    assert_relative_eq!(smooth.cutoff_weight(1.75), 0.5, epsilon = 1e-15);
}
