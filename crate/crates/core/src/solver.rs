//! Explicit RK4 integration of `∂ₜf = Q(f, f)` with the monitored
//! quantities: weighted norms, the decay certificate, moments, entropy and
//! the budget `∫₀^t R⁻³ + R^{b−4} ds`.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::collision::{CollisionOperator, QuadratureSpec, RepMode};
use crate::cosmology::ScaleFactorSpec;
use crate::distribution::{DistributionField, EquilibriumParams, VGrid};
use crate::error::{invalid, Error, Result};
use crate::kernels::{KernelParams, ReferenceKernel, ScatteringKernel};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum InitialData {
    Gaussian { eps: f64, width: f64 },
    Equilibrium(EquilibriumParams),
    FromFile(PathBuf),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub cosmology: ScaleFactorSpec,
    pub kernel: KernelParams,
    pub grid: VGrid,
    pub quad: QuadratureSpec,
    pub rep: RepMode,
    pub t_end: f64,
    pub dt: f64,
    /// Steps between snapshots.
    pub snapshot_every: usize,
    pub initial: InitialData,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.cosmology.validate()?;
        self.kernel.validate()?;
        VGrid::new(self.grid.vmax, self.grid.n)?;
        self.quad.validate()?;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(invalid(format!("solver.dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(invalid(format!("solver.t_end must be positive, got {}", self.t_end)));
        }
        if self.snapshot_every == 0 {
            return Err(invalid("solver.snapshot_every must be positive"));
        }
        Ok(())
    }

    pub fn operator(&self) -> Result<CollisionOperator> {
        CollisionOperator::new(ReferenceKernel::new(self.kernel), self.quad, self.rep)
    }

    pub fn initial_field(&self) -> Result<DistributionField> {
        let f = match &self.initial {
            InitialData::Gaussian { eps, width } => {
                DistributionField::gaussian_initial_data(*eps, *width, self.grid)?.0
            }
            InitialData::Equilibrium(p) => DistributionField::equilibrium(p, self.cosmology.r(0.0)?, self.grid)?,
            InitialData::FromFile(path) => {
                let (f, _) = DistributionField::read_csv_file(path)?;
                if f.grid != self.grid {
                    return Err(invalid(format!(
                        "initial data grid (vmax {}, n {}) does not match the configured grid (vmax {}, n {})",
                        f.grid.vmax, f.grid.n, self.grid.vmax, self.grid.n
                    )));
                }
                f
            }
        };
        f.check_nonnegative()?;
        Ok(f)
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt - 1e-9).ceil().max(1.0) as usize
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub grid_norm: f64,
    pub running_norm: f64,
    pub decay_certificate: f64,
    pub mass: f64,
    pub momentum: [f64; 3],
    pub energy: f64,
    pub entropy: f64,
    pub budget: f64,
    pub clamped_mass: f64,
}

pub struct StepOutcome {
    pub field: DistributionField,
    /// Mass removed by clamping negative values to zero.
    pub clamped_mass: f64,
}

fn axpy(base: &[f64], a: f64, k: &[f64]) -> Vec<f64> {
    base.iter().zip(k).map(|(b, x)| b + a * x).collect()
}

fn check_finite(values: &[f64], t: f64, what: &str) -> Result<()> {
    match values.iter().position(|x| !x.is_finite()) {
        None => Ok(()),
        Some(i) => Err(Error::BlowUp { t, detail: format!("{what} is {} at node {i}", values[i]) }),
    }
}

/// One classical RK4 step without clamping, with `R` supplied by `r_of_t`.
pub fn rk4_raw<K: ScatteringKernel>(
    op: &CollisionOperator<K>,
    field: &DistributionField,
    t: f64,
    dt: f64,
    r_of_t: &impl Fn(f64) -> Result<f64>,
) -> Result<Vec<f64>> {
    let grid = field.grid;
    let stage = |values: Vec<f64>, tt: f64| -> Result<Vec<f64>> {
        let k = op.field(&DistributionField { grid, values }, r_of_t(tt)?)?;
        check_finite(&k, tt, "collision term")?;
        Ok(k)
    };
    let f0 = &field.values;
    let k1 = stage(f0.clone(), t)?;
    let k2 = stage(axpy(f0, 0.5 * dt, &k1), t + 0.5 * dt)?;
    let k3 = stage(axpy(f0, 0.5 * dt, &k2), t + 0.5 * dt)?;
    let k4 = stage(axpy(f0, dt, &k3), t + dt)?;
    let out: Vec<f64> = (0..f0.len()).map(|i| f0[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect();
    check_finite(&out, t + dt, "updated field")?;
    Ok(out)
}

/// RK4 step followed by clamping negative values to zero.
pub fn step_rk4_with<K: ScatteringKernel>(
    op: &CollisionOperator<K>,
    field: &DistributionField,
    t: f64,
    dt: f64,
    r_of_t: &impl Fn(f64) -> Result<f64>,
) -> Result<StepOutcome> {
    let mut values = rk4_raw(op, field, t, dt, r_of_t)?;
    let mut clamped_mass = 0.0;
    for (idx, x) in values.iter_mut().enumerate() {
        if *x < 0.0 {
            clamped_mass += -*x * field.grid.cell_weight(idx);
            *x = 0.0;
        }
    }
    Ok(StepOutcome { field: DistributionField { grid: field.grid, values }, clamped_mass })
}

pub fn step_rk4(field: &DistributionField, t: f64, dt: f64, config: &SimConfig) -> Result<StepOutcome> {
    let op = config.operator()?;
    step_rk4_with(&op, field, t, dt, &|s| config.cosmology.r(s))
}

/// Ratio of successive differences `|y₁ − y₂| / |y₂ − y₄|` where `y_m` is
/// the result of `m` RK4 steps over `[t, t + interval]`. Tends to 16 for a
/// fourth-order method.
pub fn richardson_ratio<K: ScatteringKernel>(
    op: &CollisionOperator<K>,
    field: &DistributionField,
    t: f64,
    interval: f64,
    r_of_t: &impl Fn(f64) -> Result<f64>,
) -> Result<f64> {
    let solve = |m: usize| -> Result<Vec<f64>> {
        let dt = interval / m as f64;
        let mut f = field.clone();
        for s in 0..m {
            f.values = rk4_raw(op, &f, t + s as f64 * dt, dt, r_of_t)?;
        }
        Ok(f.values)
    };
    let (y1, y2, y4) = (solve(1)?, solve(2)?, solve(4)?);
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    Ok(dist(&y1, &y2) / dist(&y2, &y4))
}

/// Trapezoid integral of `f ln f`.
pub fn entropy(field: &DistributionField) -> f64 {
    field.entropy()
}

/// Smallest `C ≥ 0` with `running(t) ≤ ‖f₀‖ + C·running(t)²·budget(t)` on
/// every record.
pub fn fit_bound_constant(initial_norm: f64, records: &[DiagnosticsRecord]) -> f64 {
    records
        .iter()
        .filter(|r| r.budget > 0.0 && r.running_norm > 0.0)
        .map(|r| (r.running_norm - initial_norm) / (r.running_norm * r.running_norm * r.budget))
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, Serialize)]
pub struct BlowUpInfo {
    pub t: f64,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunOutput {
    pub records: Vec<DiagnosticsRecord>,
    pub initial_norm: f64,
    pub fitted_c: f64,
    /// `dt` times the estimated Lipschitz constant `2 max|Q| / max f`.
    pub stiffness: f64,
    pub steps_taken: usize,
    pub blow_up: Option<BlowUpInfo>,
    #[serde(skip)]
    pub final_field: Option<DistributionField>,
}

struct Monitor {
    running: f64,
    clamped: f64,
}

impl Monitor {
    fn record(&mut self, field: &DistributionField, t: f64, config: &SimConfig) -> Result<DiagnosticsRecord> {
        let grid_norm = field.weighted_norm();
        self.running = self.running.max(grid_norm);
        let m = field.moments(config.cosmology.r(t)?);
        Ok(DiagnosticsRecord {
            t,
            grid_norm,
            running_norm: self.running,
            decay_certificate: field.decay_certificate(),
            mass: m.mass,
            momentum: m.momentum,
            energy: m.energy,
            entropy: field.entropy(),
            budget: config.cosmology.budget(config.kernel.b, t)?,
            clamped_mass: self.clamped,
        })
    }
}

/// Integrates to `t_end`, calling `observer(snapshot_index, t, field,
/// record)` at `t = 0`, every `snapshot_every` steps and at the end. A
/// blow-up ends the run early and is reported in the output.
pub fn run(
    config: &SimConfig,
    mut observer: impl FnMut(usize, f64, &DistributionField, &DiagnosticsRecord) -> Result<()>,
) -> Result<RunOutput> {
    config.validate()?;
    let op = config.operator()?;
    let mut field = config.initial_field()?;
    let r_of_t = |s: f64| config.cosmology.r(s);

    let initial_norm = field.weighted_norm();
    let fmax = field.max_value();
    let stiffness = if fmax > 0.0 {
        let q0 = op.field(&field, r_of_t(0.0)?)?;
        let qmax = q0.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        config.dt * 2.0 * qmax / fmax
    } else {
        0.0
    };
    if stiffness > 0.5 {
        log::warn!("dt times the estimated Lipschitz constant is {stiffness:.3} > 0.5; RK4 may be inaccurate");
    }

    let mut monitor = Monitor { running: 0.0, clamped: 0.0 };
    let mut records = Vec::new();
    let mut snapshot = 0;
    let rec = monitor.record(&field, 0.0, config)?;
    observer(snapshot, 0.0, &field, &rec)?;
    records.push(rec);

    let steps = config.steps();
    let mut t = 0.0;
    let mut blow_up = None;
    let mut steps_taken = 0;
    for step in 1..=steps {
        let dt = if step == steps { config.t_end - t } else { config.dt };
        match step_rk4_with(&op, &field, t, dt, &r_of_t) {
            Ok(out) => {
                field = out.field;
                monitor.clamped += out.clamped_mass;
            }
            Err(Error::BlowUp { t, detail }) => {
                log::error!("blow-up at t = {t}: {detail}");
                blow_up = Some(BlowUpInfo { t, detail });
                break;
            }
            Err(e) => return Err(e),
        }
        t = if step == steps { config.t_end } else { step as f64 * config.dt };
        steps_taken = step;
        // The running norm is a supremum over all earlier times, so update
        // it every step even when no record is kept.
        monitor.running = monitor.running.max(field.weighted_norm());
        if step % config.snapshot_every == 0 || step == steps {
            snapshot += 1;
            let rec = monitor.record(&field, t, config)?;
            log::info!(
                "t = {t:.4}  running norm {:.6e}  certificate {:.6e}  mass {:.6e}",
                rec.running_norm,
                rec.decay_certificate,
                rec.mass
            );
            observer(snapshot, t, &field, &rec)?;
            records.push(rec);
        }
    }
    let fitted_c = fit_bound_constant(initial_norm, &records);
    Ok(RunOutput { records, initial_norm, fitted_c, stiffness, steps_taken, blow_up, final_field: Some(field) })
}
