use proptest::prelude::*;

use rwb_core::collision::{CollisionOperator, QuadratureSpec, RepMode, UIntegration};
use rwb_core::{
    AngularMode, CollisionPair, DistributionField, KernelParams, ReferenceKernel, Representation, ScaleFactorSpec,
    UnitVector, VGrid, Vec3,
};

fn vec3(scale: f64) -> impl Strategy<Value = Vec3> {
    (-scale..scale, -scale..scale, -scale..scale).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn direction() -> impl Strategy<Value = Vec3> {
    vec3(1.0).prop_filter("nonzero", |w| w.norm() > 1e-3).prop_map(|w| w.normalize())
}

fn rep() -> impl Strategy<Value = Representation> {
    prop::sample::select(Representation::ALL.to_vec())
}

fn close(a: &Vec3, b: &Vec3, tol: f64) -> bool {
    (a - b).norm() <= tol * (1.0 + a.norm().max(b.norm()))
}

fn family() -> impl Strategy<Value = ScaleFactorSpec> {
    prop_oneof![
        (0.1f64..3.0).prop_map(|c| ScaleFactorSpec::EinsteinDeSitter { c }),
        (0.1f64..2.0).prop_map(|h| ScaleFactorSpec::DeSitter { h }),
        (0.1f64..3.0, 0.1f64..2.0).prop_map(|(c, q)| ScaleFactorSpec::PowerLaw { c, q }),
    ]
}

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, failure_persistence: None, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config(256))]

    #[test]
    fn scale_covariance(v in vec3(5.0), u in vec3(5.0), w in direction(), rep in rep(),
        r in 0.2f64..20.0, lambda in 1e-3f64..1e3) {
        let a = CollisionPair::from_vecs(v, u, r).unwrap();
        let b = CollisionPair::from_vecs(lambda * v, lambda * u, lambda * r).unwrap();
        prop_assert!((a.g - b.g).abs() <= 1e-9 * (1.0 + a.g));
        prop_assert!((a.v_phi() - b.v_phi()).abs() <= 1e-9 * (1.0 + a.v_phi()));
        let w = UnitVector::new(w).unwrap();
        let (oa, ob) = (a.post(&w, rep).unwrap(), b.post(&w, rep).unwrap());
        prop_assert!(close(&(lambda * oa.v_prime.vec()), ob.v_prime.vec(), 1e-9));
        // The cutoff quantity is homogeneous of degree two.
        let (ca, cb) = (lambda * lambda * a.cutoff_quantity(w.vec()), b.cutoff_quantity(w.vec()));
        prop_assert!((ca - cb).abs() <= 1e-9 * (1e-12 + ca.max(cb)));
    }

    #[test]
    fn exchange_and_reflection(v in vec3(5.0), u in vec3(5.0), w in direction(), rep in rep(),
        r in 0.2f64..20.0) {
        let vu = CollisionPair::from_vecs(v, u, r).unwrap();
        let uv = CollisionPair::from_vecs(u, v, r).unwrap();
        let (wp, wm) = (UnitVector::new(w).unwrap(), UnitVector::new(-w).unwrap());
        let a = vu.post(&wp, rep).unwrap();
        let b = uv.post(&wp, rep).unwrap();
        prop_assert!(close(a.v_prime.vec(), b.v_prime.vec(), 1e-12));
        let c = vu.post(&wm, rep).unwrap();
        prop_assert!(close(a.v_prime.vec(), c.u_prime.vec(), 1e-10));
        prop_assert!((vu.cutoff_quantity(&w) - vu.cutoff_quantity(&-w)).abs() <= 1e-12 * (1.0 + vu.cutoff_quantity(&w)));
    }

    #[test]
    fn cutoff_weight_is_monotone(b in 0.1f64..5.0, width_frac in 0.01f64..1.0, x in 0.0f64..6.0, dx in 0.0f64..1.0) {
        for mode in [AngularMode::SharpCutoff, AngularMode::SmoothCutoff { width: width_frac * b }] {
            let k = KernelParams::new(1.0, 1.0, 1.0, b, mode).unwrap();
            let (w0, w1) = (k.cutoff_weight(x), k.cutoff_weight(x + dx));
            prop_assert!((0.0..=1.0).contains(&w0));
            prop_assert!(w1 <= w0);
            if x > b {
                prop_assert_eq!(w0, 0.0);
            }
        }
    }

    #[test]
    fn scale_factor_derivative_and_budget(spec in family(), t in 0.0f64..50.0, b in 0.0f64..3.0) {
        let r = spec.r(t).unwrap();
        prop_assert!(r >= 1.0 && r.is_finite());
        let h = 1e-5 * (1.0 + t);
        let lo = (t - h).max(0.0);
        let fd = (spec.r(t + h).unwrap() - spec.r(lo).unwrap()) / (t + h - lo);
        let rd = spec.r_dot(t).unwrap();
        prop_assert!((fd - rd).abs() <= 1e-4 * (1.0 + rd.abs()), "{} vs {}", fd, rd);
        let b1 = spec.budget(b, t).unwrap();
        let b2 = spec.budget(b, t + 1.0).unwrap();
        prop_assert!(b1 >= 0.0 && b2 >= b1);
    }

    #[test]
    fn csv_round_trip(seed in 0u64..10_000, t in 0.0f64..100.0) {
        let grid = VGrid::new(3.0, 8).unwrap();
        let phase = seed as f64 * 1e-3;
        let f = DistributionField::from_fn(grid, |v| (-(v.norm_squared()) + (v.x * 7.3 + phase).sin()).exp() * 1.234_567_891e-7);
        let mut buf = Vec::new();
        f.write_csv(t, 1, &mut buf).unwrap();
        let (g, t2) = DistributionField::read_csv(&buf[..]).unwrap();
        prop_assert_eq!(t2, t);
        prop_assert_eq!(g, f);
    }
}

proptest! {
    #![proptest_config(config(8))]

    #[test]
    fn collision_operator_is_quadratic(a in 0.0f64..10.0, r in 0.5f64..5.0) {
        let grid = VGrid::new(3.0, 8).unwrap();
        let f = DistributionField::from_fn(grid, |v| (-2.0 * (v - Vec3::new(0.4, 0.0, -0.2)).norm_squared()).exp());
        let kernel = KernelParams::new(1.0, 1.0, 1.0, 1.0, AngularMode::SmoothCutoff { width: 0.25 }).unwrap();
        let op = CollisionOperator::new(ReferenceKernel::new(kernel), QuadratureSpec::new(6, UIntegration::ReuseGrid), RepMode::OmegaR).unwrap();
        let q = op.field(&f, r).unwrap();
        let qa = op.field(&f.scaled(a), r).unwrap();
        let scale = q.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for (x, y) in q.iter().zip(&qa) {
            prop_assert!((a * a * x - y).abs() <= 1e-12 * a * a * scale + 1e-300);
        }
    }
}
