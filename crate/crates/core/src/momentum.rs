use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub type Vec3 = nalgebra::Vector3<f64>;

/// Transformed covariant momentum `v = R² p`.
///
/// Only the spatial components are stored; the energy `v⁰` depends on the
/// scale factor and is computed on demand by [`crate::kinematics::lift`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Momentum3(pub Vec3);

impl Momentum3 {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        Self::try_from_vec(Vec3::new(x, y, z))
    }

    pub fn try_from_vec(v: Vec3) -> Result<Self> {
        if v.iter().all(|c| c.is_finite()) {
            Ok(Self(v))
        } else {
            Err(invalid(format!("momentum components must be finite, got {v:?}")))
        }
    }

    pub fn zero() -> Self {
        Self(Vec3::zeros())
    }

    #[inline]
    pub fn vec(&self) -> &Vec3 {
        &self.0
    }

    pub fn norm_squared(&self) -> f64 {
        self.0.norm_squared()
    }
}

impl From<Momentum3> for Vec3 {
    fn from(m: Momentum3) -> Vec3 {
        m.0
    }
}

/// Unit vector on S², used for both `ω` and `ω̂`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitVector(Vec3);

impl UnitVector {
    pub const TOLERANCE: f64 = 1e-12;

    /// Accepts `w` only if it already has unit length within [`Self::TOLERANCE`].
    pub fn new(w: Vec3) -> Result<Self> {
        let norm = w.norm();
        if !norm.is_finite() || (norm - 1.0).abs() > Self::TOLERANCE {
            return Err(invalid(format!("|ω| = {norm}, expected 1")));
        }
        Ok(Self(w))
    }

    pub fn normalize(w: Vec3) -> Result<Self> {
        let norm = w.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(invalid(format!("cannot normalize {w:?}")));
        }
        Ok(Self(w / norm))
    }

    /// No normalization check. For directions produced by formulas that
    /// are unit by construction.
    pub(crate) fn from_vec_unchecked(w: Vec3) -> Self {
        Self(w)
    }

    #[inline]
    pub fn vec(&self) -> &Vec3 {
        &self.0
    }
}

/// Parses `"x,y,z"` into three finite reals.
pub fn parse_vec3(s: &str) -> Result<Vec3> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(invalid(format!("expected three comma-separated components, got `{s}`")));
    }
    let mut out = [0.0; 3];
    for (slot, p) in out.iter_mut().zip(&parts) {
        *slot = p.parse::<f64>().map_err(|e| invalid(format!("bad component `{p}`: {e}")))?;
        if !slot.is_finite() {
            return Err(invalid(format!("non-finite component `{p}`")));
        }
    }
    Ok(Vec3::new(out[0], out[1], out[2]))
}
