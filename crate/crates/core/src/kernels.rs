//! Cutoff scattering kernels.
//!
//! The admissible class is `0 ≤ σ(g,ω) ≤ A(1 + g^{−b})σ₀(ω)` and
//! `|∂_g σ| ≤ A g^{−b−1} σ₀(ω)`, with `0 ≤ σ₀ ≤ σ₁·1_{S²_R}`. The
//! reference kernel shipped here is `σ = A(1 + g^{−b})·σ₁·w(ω)` where `w`
//! is the sharp indicator of S²_R or a smooth ramp supported inside it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum AngularMode {
    SharpCutoff,
    /// C¹ ramp from 1 at `B − width` down to 0 at `B`.
    SmoothCutoff {
        width: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub a: f64,
    pub b: f64,
    pub sigma1: f64,
    /// Cutoff constant `B` defining S²_R.
    pub cutoff: f64,
    pub angular_mode: AngularMode,
}

impl KernelParams {
    pub fn new(a: f64, b: f64, sigma1: f64, cutoff: f64, angular_mode: AngularMode) -> Result<Self> {
        let p = Self { a, b, sigma1, cutoff, angular_mode };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(invalid(format!("kernel.A must be positive, got {}", self.a)));
        }
        if !(0.0..3.0).contains(&self.b) {
            return Err(invalid(format!("kernel.b must lie in [0, 3), got {}", self.b)));
        }
        if !(self.sigma1 > 0.0 && self.sigma1.is_finite()) {
            return Err(invalid(format!("kernel.sigma1 must be positive, got {}", self.sigma1)));
        }
        if !(self.cutoff > 0.0 && self.cutoff.is_finite()) {
            return Err(invalid(format!("kernel.B must be positive, got {}", self.cutoff)));
        }
        if let AngularMode::SmoothCutoff { width } = self.angular_mode {
            if !(width > 0.0 && width.is_finite()) {
                return Err(invalid(format!("kernel.smooth_width must be positive, got {width}")));
            }
        }
        Ok(())
    }

    /// Angular weight in `[0, 1]` for a given cutoff quantity
    /// `|v−u|²|n×ω|²/(2R²s)`. Zero everywhere outside S²_R.
    #[inline]
    pub fn cutoff_weight(&self, quantity: f64) -> f64 {
        match self.angular_mode {
            AngularMode::SharpCutoff => {
                if quantity <= self.cutoff {
                    1.0
                } else {
                    0.0
                }
            }
            AngularMode::SmoothCutoff { width } => {
                let t = ((self.cutoff - quantity) / width).clamp(0.0, 1.0);
                t * t * (3.0 - 2.0 * t)
            }
        }
    }

    /// Angular part `σ₀ = σ₁·w`.
    #[inline]
    pub fn sigma0(&self, weight: f64) -> f64 {
        self.sigma1 * weight
    }

    /// `v_φ·σ` without forming `g^{−b}` on its own:
    /// `A σ₀ (g + g^{1−b}) √s / (v⁰u⁰)`.
    #[inline]
    pub fn flux_sigma(&self, g: f64, sqrt_s: f64, v0u0: f64, weight: f64) -> f64 {
        self.a * self.sigma0(weight) * (g + g.powf(1.0 - self.b)) * sqrt_s / v0u0
    }

    /// Constant `A' = A·max(1, b)` for which the reference kernel satisfies
    /// the derivative bound of the class.
    pub fn class_derivative_constant(&self) -> f64 {
        self.a * self.b.max(1.0)
    }
}

/// A scattering kernel `σ(g, ω)`, with the angular dependence supplied
/// through the cutoff weight. The collision operators assume product form,
/// `σ` linear in the weight.
pub trait ScatteringKernel: Sync {
    fn params(&self) -> &KernelParams;
    fn sigma(&self, g: f64, weight: f64) -> Result<f64>;
    fn dsigma_dg(&self, g: f64, weight: f64) -> Result<f64>;

    /// `v_φ σ` for `g > 0`.
    fn flux_sigma(&self, g: f64, sqrt_s: f64, v0u0: f64, weight: f64) -> f64 {
        g * sqrt_s / v0u0 * self.sigma(g, weight).unwrap_or(0.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReferenceKernel {
    pub params: KernelParams,
}

impl ReferenceKernel {
    pub fn new(params: KernelParams) -> Self {
        Self { params }
    }
}

fn check_weight(weight: f64) -> Result<()> {
    if (0.0..=1.0).contains(&weight) {
        Ok(())
    } else {
        Err(invalid(format!("cutoff weight must lie in [0, 1], got {weight}")))
    }
}

impl ScatteringKernel for ReferenceKernel {
    fn params(&self) -> &KernelParams {
        &self.params
    }

    /// `A(1 + g^{−b})σ₀`. Infinite at `g = 0` when `b > 0`; integrals use
    /// [`KernelParams::flux_sigma`] instead.
    fn sigma(&self, g: f64, weight: f64) -> Result<f64> {
        if !(g >= 0.0) {
            return Err(invalid(format!("g must be nonnegative, got {g}")));
        }
        check_weight(weight)?;
        let p = &self.params;
        Ok(p.a * (1.0 + g.powf(-p.b)) * p.sigma0(weight))
    }

    fn dsigma_dg(&self, g: f64, weight: f64) -> Result<f64> {
        if !(g > 0.0) {
            return Err(invalid(format!("∂_g σ needs g > 0, got {g}")));
        }
        check_weight(weight)?;
        let p = &self.params;
        Ok(-p.a * p.b * g.powf(-p.b - 1.0) * p.sigma0(weight))
    }

    #[inline]
    fn flux_sigma(&self, g: f64, sqrt_s: f64, v0u0: f64, weight: f64) -> f64 {
        self.params.flux_sigma(g, sqrt_s, v0u0, weight)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ClassReport {
    pub samples: usize,
    pub violations: usize,
    /// Largest relative excess `(value − bound)/bound`; ≤ 0 means every
    /// sample satisfied both bounds.
    pub max_excess: f64,
    pub worst_g: f64,
    pub worst_weight: f64,
}

impl ClassReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Samples `g` log-uniformly on `(10⁻⁶, 10³)` and the cutoff weight on
/// `[0, 1]`, and checks both inequalities of the kernel class with
/// constant `A' = A·max(1, b)` against the *declared* parameters.
pub fn validate_class<K: ScatteringKernel>(kernel: &K, nsamples: usize, seed: u64) -> Result<ClassReport> {
    let p = *kernel.params();
    p.validate()?;
    let a_prime = p.class_derivative_constant();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = ClassReport {
        samples: nsamples,
        violations: 0,
        max_excess: f64::NEG_INFINITY,
        worst_g: 0.0,
        worst_weight: 0.0,
    };
    let (lo, hi) = (1e-6f64.ln(), 1e3f64.ln());
    for k in 0..nsamples {
        let g = rng.random_range(lo..hi).exp();
        // Exercise the endpoints of the weight range explicitly.
        let weight = match k % 8 {
            0 => 0.0,
            1 => 1.0,
            _ => rng.random_range(0.0..=1.0),
        };
        let sigma0 = p.sigma0(weight);
        let value_bound = p.a * (1.0 + g.powf(-p.b)) * sigma0;
        let deriv_bound = a_prime * g.powf(-p.b - 1.0) * sigma0;
        let sigma = kernel.sigma(g, weight)?;
        let dsigma = kernel.dsigma_dg(g, weight)?.abs();
        let mut excess = f64::NEG_INFINITY;
        let mut violated = sigma < 0.0;
        for (value, bound) in [(sigma, value_bound), (dsigma, deriv_bound)] {
            let e = if bound > 0.0 {
                (value - bound) / bound
            } else if value > 0.0 {
                f64::INFINITY
            } else {
                0.0
            };
            excess = excess.max(e);
            violated |= e > 1e-12;
        }
        if violated {
            report.violations += 1;
        }
        if excess > report.max_excess {
            report.max_excess = excess;
            report.worst_g = g;
            report.worst_weight = weight;
        }
    }
    Ok(report)
}
