//! Binary collision kinematics in the transformed momentum `v = R² p`.
//!
//! Two parametrizations of the post-collisional momenta are provided, both
//! built on `v' = n/2 + (g/2)·Ω` with `n = v + u`:
//!
//! - [`Representation::OmegaR`], the Glassey–Strauss type parameter
//!   normalized against `n` in the Robertson-Walker metric;
//! - [`Representation::OmegaRS`], the Strain type parameter that splits
//!   `ω̂` into components orthogonal and parallel to `n`.
//!
//! At `R = 1` the first one is the Minkowski parameter, so there is no
//! separate Minkowski code path.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::momentum::{Momentum3, UnitVector, Vec3};

/// g² values in `[-G2_CLAMP, 0)` are roundoff at `v ≈ u` and are clamped.
pub const G2_CLAMP: f64 = 1e-12;

/// Below this `|n|` the parallel projection in the RS form is dropped.
pub const N_PROJECTION_EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Representation {
    OmegaR,
    OmegaRS,
}

impl Representation {
    pub const ALL: [Representation; 2] = [Representation::OmegaR, Representation::OmegaRS];

    pub fn name(self) -> &'static str {
        match self {
            Representation::OmegaR => "R",
            Representation::OmegaRS => "RS",
        }
    }
}

impl std::str::FromStr for Representation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "R" | "OmegaR" | "omega_r" => Ok(Representation::OmegaR),
            "RS" | "OmegaRS" | "omega_rs" => Ok(Representation::OmegaRS),
            other => Err(invalid(format!("unknown representation `{other}` (expected R or RS)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollisionScalars {
    pub v0: f64,
    pub u0: f64,
    pub g: f64,
    pub s: f64,
    pub v_phi: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollisionOutcome {
    pub v_prime: Momentum3,
    pub u_prime: Momentum3,
    pub v0_prime: f64,
    pub u0_prime: f64,
    pub representation: Representation,
}

#[inline]
pub(crate) fn lift_raw(v: &Vec3, r: f64) -> f64 {
    (1.0 + v.norm_squared() / (r * r)).sqrt()
}

pub(crate) fn check_scale(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("scale factor must be positive and finite, got {r}")))
    }
}

/// Energy `v⁰ = √(1 + R⁻²|v|²)` on the unit mass shell.
pub fn lift(v: &Momentum3, r: f64) -> Result<f64> {
    check_scale(r)?;
    Ok(lift_raw(v.vec(), r))
}

/// All pair quantities that do not depend on the collision direction.
///
/// Hot loops build one of these per `(v, u)` pair and then sweep the
/// angular nodes through the `*_raw` methods.
#[derive(Clone, Copy, Debug)]
pub struct CollisionPair {
    pub v: Vec3,
    pub u: Vec3,
    pub r: f64,
    pub v0: f64,
    pub u0: f64,
    pub n: Vec3,
    pub n0: f64,
    /// |v − u|²
    pub d2: f64,
    /// |n|²
    pub nn: f64,
    pub g: f64,
    pub s: f64,
    pub sqrt_s: f64,
}

impl CollisionPair {
    pub fn new(v: &Momentum3, u: &Momentum3, r: f64) -> Result<Self> {
        check_scale(r)?;
        Self::from_vecs(*v.vec(), *u.vec(), r)
    }

    /// `g² = −(v⁰ − u⁰)² + R⁻²|v − u|²`, with the energy difference taken
    /// as `(|v|² − |u|²)/(R²(v⁰ + u⁰))` so that nothing large cancels.
    pub fn from_vecs(v: Vec3, u: Vec3, r: f64) -> Result<Self> {
        let r2 = r * r;
        let v0 = lift_raw(&v, r);
        let u0 = lift_raw(&u, r);
        let n = v + u;
        let n0 = v0 + u0;
        let d = v - u;
        let d2 = d.norm_squared();
        let dv0 = (v.norm_squared() - u.norm_squared()) / (r2 * n0);
        let mut g2 = -dv0 * dv0 + d2 / r2;
        if g2 < 0.0 {
            if g2 < -G2_CLAMP {
                return Err(Error::Consistency(format!("g² = {g2:e} for v = {v:?}, u = {u:?}, R = {r}")));
            }
            g2 = 0.0;
        }
        let g = g2.sqrt();
        let s = 4.0 + g2;
        Ok(Self { v, u, r, v0, u0, n, n0, d2, nn: n.norm_squared(), g, s, sqrt_s: s.sqrt() })
    }

    #[inline]
    pub fn v_phi(&self) -> f64 {
        self.g * self.sqrt_s / (self.v0 * self.u0)
    }

    pub fn scalars(&self) -> CollisionScalars {
        CollisionScalars { v0: self.v0, u0: self.u0, g: self.g, s: self.s, v_phi: self.v_phi() }
    }

    /// `r = √((n⁰)² − R⁻²(n·ω)²)`, the normalization of the Ω_R parameter.
    #[inline]
    pub fn r_omega(&self, omega: &Vec3) -> f64 {
        let nw = self.n.dot(omega);
        (self.n0 * self.n0 - nw * nw / (self.r * self.r)).sqrt()
    }

    /// `|v − u|²|n × ω|² / (2R²s)`; the cutoff set is where this is ≤ B.
    #[inline]
    pub fn cutoff_quantity(&self, omega: &Vec3) -> f64 {
        let nw = self.n.dot(omega);
        let cross2 = (self.nn - nw * nw).max(0.0);
        self.d2 * cross2 / (2.0 * self.r * self.r * self.s)
    }

    /// Post-collisional `(v', v'⁰)` in the Ω_R parametrization.
    #[inline]
    pub fn post_omega_r_raw(&self, omega: &Vec3) -> (Vec3, f64) {
        let nw = self.n.dot(omega);
        let rr = self.n0 * self.n0 - nw * nw / (self.r * self.r);
        let root = rr.sqrt();
        let v_prime = 0.5 * self.n + (0.5 * self.r * self.g * self.n0 / root) * omega;
        let v0_prime = 0.5 * self.n0 + 0.5 * self.g / self.r * nw / root;
        (v_prime, v0_prime)
    }

    /// Post-collisional `(v', v'⁰)` in the Ω_RS parametrization.
    #[inline]
    pub fn post_omega_rs_raw(&self, omega_hat: &Vec3) -> (Vec3, f64) {
        let nw = self.n.dot(omega_hat);
        let half_rg = 0.5 * self.r * self.g;
        let mut dir = *omega_hat;
        if self.nn.sqrt() >= N_PROJECTION_EPS {
            dir += ((self.n0 / self.sqrt_s - 1.0) * nw / self.nn) * self.n;
        }
        let v_prime = 0.5 * self.n + half_rg * dir;
        let v0_prime = 0.5 * self.n0 + 0.5 * self.g / self.r * nw / self.sqrt_s;
        (v_prime, v0_prime)
    }

    pub fn post_omega_r(&self, omega: &UnitVector) -> Result<CollisionOutcome> {
        let nw = self.n.dot(omega.vec());
        let rr = self.n0 * self.n0 - nw * nw / (self.r * self.r);
        if rr <= 0.0 {
            return Err(Error::DegenerateDirection(format!("(n⁰)² − R⁻²(n·ω)² = {rr:e} is not positive")));
        }
        let (vp, vp0) = self.post_omega_r_raw(omega.vec());
        Ok(self.outcome(vp, vp0, Representation::OmegaR))
    }

    pub fn post_omega_rs(&self, omega_hat: &UnitVector) -> CollisionOutcome {
        let (vp, vp0) = self.post_omega_rs_raw(omega_hat.vec());
        self.outcome(vp, vp0, Representation::OmegaRS)
    }

    pub fn post(&self, omega: &UnitVector, rep: Representation) -> Result<CollisionOutcome> {
        match rep {
            Representation::OmegaR => self.post_omega_r(omega),
            Representation::OmegaRS => Ok(self.post_omega_rs(omega)),
        }
    }

    fn outcome(&self, vp: Vec3, vp0: f64, representation: Representation) -> CollisionOutcome {
        CollisionOutcome {
            v_prime: Momentum3(vp),
            u_prime: Momentum3(self.n - vp),
            v0_prime: vp0,
            u0_prime: self.n0 - vp0,
            representation,
        }
    }

    /// The `ω̂` for which the RS form reproduces the Ω_R outcome of `ω`.
    pub fn omega_hat_raw(&self, omega: &Vec3) -> Vec3 {
        if self.nn.sqrt() < N_PROJECTION_EPS {
            return *omega;
        }
        let nw = self.n.dot(omega);
        let root = self.r_omega(omega);
        (self.n0 * omega + ((self.sqrt_s - self.n0) * nw / self.nn) * self.n) / root
    }
}

/// Lorentz scalars `(v⁰, u⁰, g, s, v_φ)` of the pair at scale factor `r`.
pub fn collision_scalars(v: &Momentum3, u: &Momentum3, r: f64) -> Result<CollisionScalars> {
    Ok(CollisionPair::new(v, u, r)?.scalars())
}

pub fn post_collision_omega_r(v: &Momentum3, u: &Momentum3, omega: &UnitVector, r: f64) -> Result<CollisionOutcome> {
    CollisionPair::new(v, u, r)?.post_omega_r(omega)
}

pub fn post_collision_omega_rs(
    v: &Momentum3,
    u: &Momentum3,
    omega_hat: &UnitVector,
    r: f64,
) -> Result<CollisionOutcome> {
    Ok(CollisionPair::new(v, u, r)?.post_omega_rs(omega_hat))
}

pub fn post_collision(
    v: &Momentum3,
    u: &Momentum3,
    omega: &UnitVector,
    r: f64,
    rep: Representation,
) -> Result<CollisionOutcome> {
    CollisionPair::new(v, u, r)?.post(omega, rep)
}

pub fn omega_hat_from_omega(v: &Momentum3, u: &Momentum3, omega: &UnitVector, r: f64) -> Result<UnitVector> {
    let pair = CollisionPair::new(v, u, r)?;
    Ok(UnitVector::from_vec_unchecked(pair.omega_hat_raw(omega.vec())))
}

/// Nonrelativistic σ-representation, the `R → ∞` limit of the Ω_R form.
pub fn newtonian_post_collision(v: &Momentum3, u: &Momentum3, omega: &UnitVector) -> (Momentum3, Momentum3) {
    let half_sum = 0.5 * (v.vec() + u.vec());
    let half_gap = 0.5 * (v.vec() - u.vec()).norm();
    (Momentum3(half_sum + half_gap * omega.vec()), Momentum3(half_sum - half_gap * omega.vec()))
}

/// `|v|² + |u|² − |v'|² − |u'|²`, the failure of the Newtonian kinetic
/// energy invariant at finite `R`.
pub fn energy_defect(v: &Momentum3, u: &Momentum3, omega: &UnitVector, r: f64, rep: Representation) -> Result<f64> {
    let out = post_collision(v, u, omega, r, rep)?;
    Ok(defect_of(v.vec(), u.vec(), &out))
}

#[inline]
pub(crate) fn defect_of(v: &Vec3, u: &Vec3, out: &CollisionOutcome) -> f64 {
    v.norm_squared() + u.norm_squared() - out.v_prime.norm_squared() - out.u_prime.norm_squared()
}

/// Membership of `ω` in the cutoff set S²_R with constant `b_cut`.
pub fn cutoff_contains(v: &Momentum3, u: &Momentum3, omega: &UnitVector, r: f64, b_cut: f64) -> Result<bool> {
    if !(b_cut > 0.0) {
        return Err(invalid(format!("cutoff constant must be positive, got {b_cut}")));
    }
    let pair = CollisionPair::new(v, u, r)?;
    Ok(pair.cutoff_quantity(omega.vec()) <= b_cut)
}
