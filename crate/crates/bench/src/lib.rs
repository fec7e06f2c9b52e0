//! Fixtures shared by the benchmarks.

use rwb_core::collision::PairScreen;
use rwb_core::{
    AngularMode, CollisionOperator, DistributionField, KernelParams, QuadratureSpec, ReferenceKernel, RepMode,
    UIntegration, VGrid, Vec3,
};

/// Small-data initial field `εe^{−2|v|²}` with `ε = 10⁻³` on `[−4, 4]³`.
pub fn gaussian_field(n: usize) -> DistributionField {
    let grid = VGrid::new(4.0, n).expect("valid grid");
    DistributionField::gaussian_initial_data(1e-3, 2.0, grid).expect("valid data").0
}

/// Reference kernel with `b = 1`, `B = 1` and the smooth cutoff.
pub fn operator(angular_nodes: usize, u_integration: UIntegration, screen: Option<PairScreen>) -> CollisionOperator {
    let params =
        KernelParams::new(1.0, 1.0, 1.0, 1.0, AngularMode::SmoothCutoff { width: 0.25 }).expect("valid kernel");
    let quad = QuadratureSpec { angular_nodes, u_integration, screen };
    CollisionOperator::new(ReferenceKernel::new(params), quad, RepMode::OmegaR).expect("valid quadrature")
}

/// Deterministic spread of momenta and directions for the pointwise benches.
pub fn triples(count: usize) -> Vec<(Vec3, Vec3, Vec3)> {
    (0..count)
        .map(|k| {
            let t = k as f64;
            let v = Vec3::new(2.0 * (0.7 * t).sin(), 1.5 * (1.3 * t).cos(), 3.0 * (0.3 * t).sin());
            let u = Vec3::new(-(1.1 * t).cos(), 2.5 * (0.9 * t).sin(), 0.5 * (2.3 * t).cos());
            let w = Vec3::new((0.5 * t).sin() * (0.2 * t).cos(), (0.5 * t).sin() * (0.2 * t).sin(), (0.5 * t).cos());
            (v, u, w)
        })
        .collect()
}
