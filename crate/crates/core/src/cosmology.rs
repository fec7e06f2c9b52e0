//! Scale-factor families with `R(0) = 1`, `Ṙ ≥ 0`, `R → ∞`, and the
//! integrability condition `∫₀^∞ R⁻³ + R^{b−4} dt < ∞`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::quadrature::adaptive_simpson;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum ScaleFactorSpec {
    /// `(1 + ct)^{2/3}`: matter domination, shifted so that `R(0) = 1`.
    EinsteinDeSitter { c: f64 },
    /// `e^{Ht}`.
    DeSitter { h: f64 },
    /// `(1 + ct)^q`.
    PowerLaw { c: f64, q: f64 },
    /// Frozen `R ≡ r0`. Not an admissible cosmology (`R` does not grow and
    /// `R(0) ≠ 1` in general); used for fixed-background experiments.
    Static { r0: f64 },
}

pub const EDS_EXPONENT: f64 = 2.0 / 3.0;

impl ScaleFactorSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = |name: &str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(invalid(format!("cosmology.{name} must be positive, got {x}")))
            }
        };
        match *self {
            Self::EinsteinDeSitter { c } => ok("c", c),
            Self::DeSitter { h } => ok("H", h),
            Self::PowerLaw { c, q } => ok("c", c).and(ok("q", q)),
            Self::Static { r0 } => ok("R0", r0),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::EinsteinDeSitter { .. } => "EinsteinDeSitter",
            Self::DeSitter { .. } => "DeSitter",
            Self::PowerLaw { .. } => "PowerLaw",
            Self::Static { .. } => "Static",
        }
    }

    /// `(c, q)` for the power-law families.
    fn power(&self) -> Option<(f64, f64)> {
        match *self {
            Self::EinsteinDeSitter { c } => Some((c, EDS_EXPONENT)),
            Self::PowerLaw { c, q } => Some((c, q)),
            _ => None,
        }
    }

    pub fn r(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(self.r_unchecked(t))
    }

    pub fn r_dot(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(self.r_dot_unchecked(t))
    }

    #[inline]
    pub fn r_unchecked(&self, t: f64) -> f64 {
        match *self {
            Self::DeSitter { h } => (h * t).exp(),
            Self::Static { r0 } => r0,
            _ => {
                let (c, q) = self.power().unwrap();
                (1.0 + c * t).powf(q)
            }
        }
    }

    #[inline]
    pub fn r_dot_unchecked(&self, t: f64) -> f64 {
        match *self {
            Self::DeSitter { h } => h * (h * t).exp(),
            Self::Static { .. } => 0.0,
            _ => {
                let (c, q) = self.power().unwrap();
                c * q * (1.0 + c * t).powf(q - 1.0)
            }
        }
    }

    /// `∫₀^t R^p ds` in closed form.
    pub fn integral_of_power(&self, p: f64, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(match *self {
            Self::DeSitter { h } => {
                let k = p * h;
                if k.abs() < 1e-300 {
                    t
                } else {
                    (k * t).exp_m1() / k
                }
            }
            Self::Static { r0 } => r0.powf(p) * t,
            _ => {
                let (c, q) = self.power().unwrap();
                let e = p * q + 1.0;
                let x = (c * t).ln_1p();
                if e.abs() < 1e-14 {
                    x / c
                } else {
                    (e * x).exp_m1() / (c * e)
                }
            }
        })
    }

    /// `∫₀^t R⁻³ + R^{b−4} ds`, the budget driving the a priori estimate.
    pub fn budget(&self, b: f64, t: f64) -> Result<f64> {
        Ok(self.integral_of_power(-3.0, t)? + self.integral_of_power(b - 4.0, t)?)
    }
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("time must be finite and nonnegative, got {t}")))
    }
}

/// How the two integrands `R⁻³` and `R^{b−4}` decay at late times.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum DecayExponents {
    /// Integrands behave like `t^{r_inv3}` and `t^{r_b4}`.
    Power {
        r_inv3: f64,
        r_b4: f64,
    },
    /// Integrands behave like `e^{r_inv3·t}` and `e^{r_b4·t}`.
    Exponential {
        r_inv3: f64,
        r_b4: f64,
    },
    Constant,
}

#[derive(Clone, Debug, Serialize)]
pub struct IntegrabilityReport {
    pub family: String,
    pub b: f64,
    pub converges: bool,
    pub analytic_exponents: DecayExponents,
    /// `∫₀^T` by adaptive quadrature.
    pub numeric_integral: f64,
    pub horizon: f64,
    /// Local log-log slope of the integrand at the horizon.
    pub tail_slope: f64,
    /// Power-law bound on `∫_T^∞`, infinite when the slope is ≥ −1.
    pub tail_bound: f64,
    pub numeric_converges: bool,
}

impl IntegrabilityReport {
    pub fn numeric_estimate(&self) -> f64 {
        self.numeric_integral + self.tail_bound
    }

    pub fn consistent(&self) -> bool {
        self.converges == self.numeric_converges
    }
}

pub const INTEGRABILITY_HORIZON: f64 = 1e6;

pub fn integrability(spec: &ScaleFactorSpec, b: f64) -> Result<IntegrabilityReport> {
    spec.validate()?;
    if !(0.0..3.0).contains(&b) {
        return Err(invalid(format!("b must lie in [0, 3), got {b}")));
    }
    let (converges, analytic_exponents) = match *spec {
        ScaleFactorSpec::DeSitter { h } => {
            (true, DecayExponents::Exponential { r_inv3: -3.0 * h, r_b4: (b - 4.0) * h })
        }
        ScaleFactorSpec::Static { .. } => (false, DecayExponents::Constant),
        _ => {
            let (_, q) = spec.power().unwrap();
            let (e1, e2) = (-3.0 * q, (b - 4.0) * q);
            (e1 < -1.0 && e2 < -1.0, DecayExponents::Power { r_inv3: e1, r_b4: e2 })
        }
    };

    let integrand = |t: f64| {
        let r = spec.r_unchecked(t);
        r.powi(-3) + r.powf(b - 4.0)
    };
    // Geometric panels resolve both the early transient and the long tail.
    let horizon = INTEGRABILITY_HORIZON;
    let rate = match *spec {
        ScaleFactorSpec::DeSitter { h } => h,
        ScaleFactorSpec::EinsteinDeSitter { c } | ScaleFactorSpec::PowerLaw { c, .. } => c,
        ScaleFactorSpec::Static { .. } => 1.0,
    };
    let mut a = 0.0;
    let mut panel = (1e-2 / rate).min(1.0);
    let mut numeric_integral = 0.0;
    while a < horizon {
        let b_end = (a + panel).min(horizon);
        let scale = integrand(a).abs().max(1e-300);
        numeric_integral += adaptive_simpson(&integrand, a, b_end, 1e-12 * scale * (b_end - a), 30);
        a = b_end;
        panel *= 2.0;
    }

    let (f1, f2) = (integrand(horizon), integrand(2.0 * horizon));
    let tail_slope = if f1 > 0.0 && f2 > 0.0 { (f2 / f1).ln() / 2f64.ln() } else { f64::NEG_INFINITY };
    // Margin keeps the borderline slope −1 (log divergence) on the diverging side.
    let numeric_converges = tail_slope < -1.0 - 1e-3;
    let tail_bound = if !numeric_converges {
        f64::INFINITY
    } else if f1 == 0.0 {
        0.0
    } else {
        f1 * horizon / (-tail_slope - 1.0)
    };
    Ok(IntegrabilityReport {
        family: spec.name().to_string(),
        b,
        converges,
        analytic_exponents,
        numeric_integral,
        horizon,
        tail_slope,
        tail_bound,
        numeric_converges,
    })
}
