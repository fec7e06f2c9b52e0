//! Simulation and verification toolkit for the spatially homogeneous
//! relativistic Boltzmann equation in a spatially flat Robertson-Walker
//! spacetime with a prescribed scale factor.
//!
//! The distribution function is written in the transformed momentum
//! `v = R² p`, in which the equation reads `∂ₜf = Q(f, f)` with all of the
//! expansion absorbed into the collision operator. Units are `m = c = 1`.
//!
//! Module map:
//!
//! - [`kinematics`]: binary collision kinematics for both post-collisional
//!   parametrizations, the `ω ↔ ω̂` map and the angular cutoff set.
//! - [`kernels`]: the cutoff scattering-kernel class and a reference kernel.
//! - [`cosmology`]: scale-factor families and the integrability condition.
//! - [`distribution`]: grid fields, interpolation, weighted norms, moments.
//! - [`collision`]: deterministic and Monte Carlo collision operators.
//! - [`solver`]: RK4 time integration with the monitored diagnostics.
//! - [`estimates`]: numerical certification of the analytic estimates.
//! - [`config`]: the flat `module.key=value` run configuration.

pub mod collision;
pub mod config;
pub mod cosmology;
pub mod distribution;
pub mod error;
pub mod estimates;
pub mod kernels;
pub mod kinematics;
pub mod momentum;
pub mod quadrature;
pub mod sampling;
pub mod solver;

pub use collision::{CollisionOperator, McSpec, QuadratureSpec, RepMode, UIntegration};
pub use cosmology::ScaleFactorSpec;
pub use distribution::{DistributionField, EquilibriumParams, VGrid};
pub use error::{Error, Result};
pub use kernels::{AngularMode, KernelParams, ReferenceKernel, ScatteringKernel};
pub use kinematics::{CollisionOutcome, CollisionPair, CollisionScalars, Representation};
pub use momentum::{Momentum3, UnitVector, Vec3};
pub use solver::{DiagnosticsRecord, SimConfig};
