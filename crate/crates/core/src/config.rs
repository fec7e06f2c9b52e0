//! Flat `module.key = value` run configuration.
//!
//! One key per line, `#` starts a comment, blank lines are ignored. Unknown
//! and repeated keys are errors so that typos do not silently fall back to
//! defaults.

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::collision::{PairScreen, QuadratureSpec, RepMode, UIntegration};
use crate::cosmology::ScaleFactorSpec;
use crate::distribution::{EquilibriumParams, VGrid};
use crate::error::{Error, Result};
use crate::kernels::{AngularMode, KernelParams};
use crate::momentum::parse_vec3;
use crate::solver::{InitialData, SimConfig};

pub const KNOWN_KEYS: &[&str] = &[
    "cosmology.family",
    "cosmology.c",
    "cosmology.H",
    "cosmology.q",
    "cosmology.R0",
    "kernel.A",
    "kernel.b",
    "kernel.sigma1",
    "kernel.B",
    "kernel.angular_mode",
    "kernel.smooth_width",
    "grid.vmax",
    "grid.n",
    "quadrature.angular_nodes",
    "quadrature.u_integration",
    "quadrature.u_stride",
    "quadrature.decay_rate",
    "quadrature.pair_tol",
    "solver.rep",
    "solver.t_end",
    "solver.dt",
    "solver.snapshot_every",
    "initial.kind",
    "initial.eps",
    "initial.width",
    "initial.alpha",
    "initial.beta",
    "initial.gamma",
    "initial.path",
    "output.snapshot_stride",
];

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub sim: SimConfig,
    /// Write every `snapshot_stride`-th node per axis to snapshot files.
    pub snapshot_stride: usize,
    /// The parsed entries, for the run manifest.
    pub entries: BTreeMap<String, String>,
}

impl RunConfig {
    /// Canonical text form: the parsed entries in key order.
    pub fn to_text(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

struct Entries {
    map: BTreeMap<String, (usize, String)>,
}

impl Entries {
    fn raw(&self, key: &str) -> Option<(usize, &str)> {
        self.map.get(key).map(|(l, v)| (*l, v.as_str()))
    }

    fn required(&self, key: &str) -> Result<(usize, &str)> {
        self.raw(key).ok_or_else(|| Error::MissingKey(key.to_string()))
    }

    fn parse<T: std::str::FromStr>(&self, key: &str, line: usize, value: &str) -> Result<T> {
        value.parse().map_err(|_| Error::Config { line, msg: format!("cannot parse {key} = {value:?}") })
    }

    fn num(&self, key: &str) -> Result<f64> {
        let (line, v) = self.required(key)?;
        self.parse(key, line, v)
    }

    fn num_or(&self, key: &str, default: f64) -> Result<f64> {
        match self.raw(key) {
            Some((line, v)) => self.parse(key, line, v),
            None => Ok(default),
        }
    }

    fn count_or(&self, key: &str, default: usize) -> Result<usize> {
        match self.raw(key) {
            Some((line, v)) => self.parse(key, line, v),
            None => Ok(default),
        }
    }

    /// Attaches the line of `key` to validation errors raised while
    /// building from it.
    fn at<T>(&self, key: &str, r: Result<T>) -> Result<T> {
        r.map_err(|e| match (e, self.raw(key)) {
            (Error::InvalidArgument(msg), Some((line, _))) => Error::Config { line, msg },
            (e, _) => e,
        })
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| Error::Config { line, msg: format!("expected key = value, got {content:?}") })?;
        let (key, value) = (key.trim(), value.trim());
        if !KNOWN_KEYS.contains(&key) {
            return Err(Error::Config { line, msg: format!("unknown key {key:?}") });
        }
        if value.is_empty() {
            return Err(Error::Config { line, msg: format!("empty value for {key}") });
        }
        if let Some((first, _)) = map.insert(key.to_string(), (line, value.to_string())) {
            return Err(Error::Config { line, msg: format!("{key} already set on line {first}") });
        }
    }
    let e = Entries { map };

    let (family_line, family) = e.required("cosmology.family")?;
    let cosmology = match family {
        "EinsteinDeSitter" | "EdS" => ScaleFactorSpec::EinsteinDeSitter { c: e.num("cosmology.c")? },
        "DeSitter" => ScaleFactorSpec::DeSitter { h: e.num("cosmology.H")? },
        "PowerLaw" => ScaleFactorSpec::PowerLaw { c: e.num("cosmology.c")?, q: e.num("cosmology.q")? },
        "Static" => ScaleFactorSpec::Static { r0: e.num("cosmology.R0")? },
        other => {
            return Err(Error::Config {
                line: family_line,
                msg: format!("unknown cosmology family {other:?} (EinsteinDeSitter, DeSitter, PowerLaw, Static)"),
            })
        }
    };
    e.at("cosmology.family", cosmology.validate())?;

    let angular_mode = match e.raw("kernel.angular_mode") {
        None | Some((_, "sharp")) => AngularMode::SharpCutoff,
        Some((_, "smooth")) => AngularMode::SmoothCutoff { width: e.num_or("kernel.smooth_width", 0.1)? },
        Some((line, other)) => {
            return Err(Error::Config {
                line,
                msg: format!("kernel.angular_mode must be sharp or smooth, got {other:?}"),
            })
        }
    };
    let kernel = e.at(
        "kernel.b",
        KernelParams::new(
            e.num("kernel.A")?,
            e.num("kernel.b")?,
            e.num_or("kernel.sigma1", 1.0)?,
            e.num("kernel.B")?,
            angular_mode,
        ),
    )?;

    let grid = e.at("grid.n", VGrid::new(e.num_or("grid.vmax", 4.0)?, e.count_or("grid.n", 32)?))?;

    let u_integration = match e.raw("quadrature.u_integration") {
        None | Some((_, "reuse")) => UIntegration::ReuseGrid,
        Some((_, "subsampled")) => UIntegration::SubsampledGrid { stride: e.count_or("quadrature.u_stride", 2)? },
        Some((line, other)) => {
            return Err(Error::Config {
                line,
                msg: format!("quadrature.u_integration must be reuse or subsampled, got {other:?}"),
            })
        }
    };
    let screen = match e.raw("quadrature.pair_tol") {
        None => None,
        Some((line, v)) => Some(PairScreen {
            tol: e.parse("quadrature.pair_tol", line, v)?,
            decay_rate: e.num("quadrature.decay_rate")?,
        }),
    };
    let quad = QuadratureSpec { angular_nodes: e.count_or("quadrature.angular_nodes", 6)?, u_integration, screen };
    e.at("quadrature.angular_nodes", quad.validate())?;

    let rep = match e.raw("solver.rep") {
        None => RepMode::OmegaR,
        Some((line, v)) => v
            .parse()
            .map_err(|_| Error::Config { line, msg: format!("solver.rep must be R, RS or Adaptive, got {v:?}") })?,
    };

    let (kind_line, kind) = e.required("initial.kind")?;
    let initial = match kind {
        "gaussian" => InitialData::Gaussian { eps: e.num("initial.eps")?, width: e.num("initial.width")? },
        "equilibrium" => {
            let beta = match e.raw("initial.beta") {
                None => crate::momentum::Vec3::zeros(),
                Some((line, v)) => parse_vec3(v).map_err(|err| Error::Config { line, msg: err.to_string() })?,
            };
            InitialData::Equilibrium(EquilibriumParams {
                alpha: e.num_or("initial.alpha", 0.0)?,
                beta,
                gamma: e.num("initial.gamma")?,
            })
        }
        "file" => InitialData::FromFile(PathBuf::from(e.required("initial.path")?.1)),
        other => {
            return Err(Error::Config {
                line: kind_line,
                msg: format!("initial.kind must be gaussian, equilibrium or file, got {other:?}"),
            })
        }
    };

    let sim = SimConfig {
        cosmology,
        kernel,
        grid,
        quad,
        rep,
        t_end: e.num("solver.t_end")?,
        dt: e.num("solver.dt")?,
        snapshot_every: e.count_or("solver.snapshot_every", 10)?,
        initial,
    };
    e.at("solver.dt", sim.validate())?;
    let snapshot_stride = e.count_or("output.snapshot_stride", 1)?.max(1);
    let entries = e.map.into_iter().map(|(k, (_, v))| (k, v)).collect();
    Ok(RunConfig { sim, snapshot_stride, entries })
}
