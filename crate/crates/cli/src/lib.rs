//! Command implementations behind the `rwb` binary.
//!
//! Every command returns its process exit code. Errors returned as `Err`
//! are usage or configuration problems and end the process with code 1.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;

use rwb_core::config::{parse_config, RunConfig};
use rwb_core::cosmology::{integrability, IntegrabilityReport};
use rwb_core::estimates::{run_suite, CheckReport, Suite, SuiteOptions};
use rwb_core::kinematics::CollisionPair;
use rwb_core::solver::{self, InitialData};
use rwb_core::{CollisionOutcome, CollisionScalars, Error, Representation, ScaleFactorSpec, UnitVector, Vec3};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_BLOW_UP: i32 = 2;
pub const EXIT_VIOLATIONS: i32 = 3;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const STATUS_FILE: &str = "status.json";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.json";
pub const LOG_FILE: &str = "run.log";
pub const SNAPSHOT_DIR: &str = "snapshots";

/// Written once, before the first step, and never touched again. The end
/// time and exit code go to `status.json`.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub config_path: PathBuf,
    /// Parsed entries, in key order.
    pub config: BTreeMap<String, String>,
    pub config_text: String,
    /// The solver is deterministic; no random streams are drawn.
    pub seeds: BTreeMap<String, u64>,
    pub start_timestamp: String,
    pub end_timestamp: Option<String>,
    pub outputs: BTreeMap<String, String>,
}

#[derive(Debug, Serialize)]
struct RunStatus {
    end_timestamp: String,
    exit_code: i32,
    steps_taken: usize,
    snapshots: usize,
    blow_up: Option<String>,
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339()
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Reads and parses a run configuration. A relative `initial.path` is
/// taken relative to the config file.
pub fn load_config(config_path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(config_path).with_context(|| format!("reading {}", config_path.display()))?;
    let mut cfg = parse_config(&text).with_context(|| format!("in {}", config_path.display()))?;
    if let InitialData::FromFile(p) = &cfg.sim.initial {
        if p.is_relative() {
            let base = config_path.parent().unwrap_or(Path::new("."));
            cfg.sim.initial = InitialData::FromFile(base.join(p));
        }
    }
    cfg.sim.validate().with_context(|| format!("in {}", config_path.display()))?;
    Ok(cfg)
}

pub fn cmd_run(config_path: &Path, out_dir: &Path) -> Result<i32> {
    let cfg = load_config(config_path)?;
    fs::create_dir_all(out_dir.join(SNAPSHOT_DIR)).with_context(|| format!("creating {}", out_dir.display()))?;

    let outputs = [
        ("manifest", MANIFEST_FILE),
        ("status", STATUS_FILE),
        ("diagnostics", DIAGNOSTICS_FILE),
        ("log", LOG_FILE),
        ("snapshots", SNAPSHOT_DIR),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .collect();
    let manifest = RunManifest {
        tool: "rwb".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_path: config_path.to_path_buf(),
        config: cfg.entries.clone(),
        config_text: cfg.to_text(),
        seeds: BTreeMap::new(),
        start_timestamp: now(),
        end_timestamp: None,
        outputs,
    };
    write_json(&out_dir.join(MANIFEST_FILE), &manifest)?;

    let mut log = BufWriter::new(File::create(out_dir.join(LOG_FILE))?);
    writeln!(log, "start {}", manifest.start_timestamp)?;
    writeln!(log, "steps {} dt {} t_end {}", cfg.sim.steps(), cfg.sim.dt, cfg.sim.t_end)?;

    let stride = cfg.snapshot_stride;
    let mut snapshots = 0;
    let result = solver::run(&cfg.sim, |idx, t, field, rec| {
        let path = out_dir.join(SNAPSHOT_DIR).join(format!("{idx:04}.csv"));
        field.write_csv_file(t, stride, &path)?;
        snapshots += 1;
        writeln!(
            log,
            "snapshot {idx:04} t {t} running_norm {:e} certificate {:e} mass {:e} clamped {:e}",
            rec.running_norm, rec.decay_certificate, rec.mass, rec.clamped_mass
        )?;
        Ok(())
    });

    let (code, steps_taken, blow_up) = match result {
        Ok(output) => {
            write_json(&out_dir.join(DIAGNOSTICS_FILE), &output)?;
            match &output.blow_up {
                Some(b) => (EXIT_BLOW_UP, output.steps_taken, Some(format!("t = {}: {}", b.t, b.detail))),
                None => (EXIT_OK, output.steps_taken, None),
            }
        }
        Err(Error::BlowUp { t, detail }) => (EXIT_BLOW_UP, 0, Some(format!("t = {t}: {detail}"))),
        Err(e) => return Err(e.into()),
    };
    if let Some(b) = &blow_up {
        writeln!(log, "blow-up {b}")?;
        eprintln!("blow-up at {b}");
    }
    let status = RunStatus { end_timestamp: now(), exit_code: code, steps_taken, snapshots, blow_up };
    writeln!(log, "end {} exit {}", status.end_timestamp, code)?;
    log.flush()?;
    write_json(&out_dir.join(STATUS_FILE), &status)?;
    Ok(code)
}

fn fmt_slack(x: f64) -> String {
    format!("{x:+.3e}")
}

/// Prints one row per report and, for failing checks, the worst case.
pub fn print_reports(reports: &[CheckReport], out: &mut dyn Write) -> std::io::Result<()> {
    let width = reports.iter().map(|r| r.lemma_id.len()).max().unwrap_or(5).max(5);
    writeln!(out, "{:<width$}  {:>9}  {:>10}  {:>11}  status", "check", "samples", "violations", "max_slack")?;
    for r in reports {
        let status = if r.passed() { "ok" } else { "FAIL" };
        writeln!(
            out,
            "{:<width$}  {:>9}  {:>10}  {:>11}  {status}",
            r.lemma_id,
            r.samples_run,
            r.violations,
            fmt_slack(r.max_slack)
        )?;
        if let (false, Some(case)) = (r.passed(), &r.worst_case) {
            writeln!(out, "    worst: {} {:?}", case.check, case.inputs)?;
        }
    }
    let failed = reports.iter().filter(|r| !r.passed()).count();
    writeln!(out, "{} checks, {failed} failed", reports.len())
}

pub fn cmd_verify(suite: Suite, opts: &SuiteOptions, json: Option<&Path>, out: &mut dyn Write) -> Result<i32> {
    let reports = run_suite(suite, opts)?;
    print_reports(&reports, out)?;
    if let Some(path) = json {
        write_json(path, &reports)?;
    }
    Ok(if reports.iter().all(CheckReport::passed) { EXIT_OK } else { EXIT_VIOLATIONS })
}

#[derive(Debug, Serialize)]
pub struct KinematicsRecord {
    #[serde(rename = "R")]
    pub r: f64,
    pub representation: Representation,
    pub v: Vec3,
    pub u: Vec3,
    /// `ω` for the Ω_R form, `ω̂` for the Ω_RS form.
    pub omega: Vec3,
    pub scalars: CollisionScalars,
    pub outcome: CollisionOutcome,
    pub energy_defect: f64,
    pub cutoff_quantity: f64,
    #[serde(rename = "B")]
    pub cutoff: Option<f64>,
    pub in_cutoff_set: Option<bool>,
    /// The `ω̂` giving the same outcome in the Ω_RS form, for `rep = R`.
    pub omega_hat: Option<Vec3>,
}

pub fn kinematics_record(
    v: Vec3,
    u: Vec3,
    omega: Vec3,
    r: f64,
    rep: Representation,
    cutoff: Option<f64>,
) -> Result<KinematicsRecord> {
    if !(r > 0.0 && r.is_finite()) {
        bail!("--R must be positive, got {r}");
    }
    if let Some(b) = cutoff {
        if !(b >= 0.0 && b.is_finite()) {
            bail!("--B must be nonnegative, got {b}");
        }
    }
    let w = UnitVector::normalize(omega).context("--omega")?;
    let pair = CollisionPair::from_vecs(v, u, r)?;
    let outcome = pair.post(&w, rep)?;
    let energy_defect =
        v.norm_squared() + u.norm_squared() - outcome.v_prime.norm_squared() - outcome.u_prime.norm_squared();
    let cutoff_quantity = pair.cutoff_quantity(w.vec());
    Ok(KinematicsRecord {
        r,
        representation: rep,
        v,
        u,
        omega: *w.vec(),
        scalars: pair.scalars(),
        outcome,
        energy_defect,
        cutoff_quantity,
        cutoff,
        in_cutoff_set: cutoff.map(|b| cutoff_quantity <= b),
        omega_hat: (rep == Representation::OmegaR).then(|| pair.omega_hat_raw(w.vec())),
    })
}

pub fn cmd_kinematics(record: &KinematicsRecord, out: &mut dyn Write) -> Result<i32> {
    writeln!(out, "{}", serde_json::to_string_pretty(record)?)?;
    Ok(EXIT_OK)
}

/// Family parameters as given on the command line; unset ones default
/// to 1.
#[derive(Clone, Debug, Default)]
pub struct FamilyArgs {
    pub family: String,
    pub c: Option<f64>,
    pub h: Option<f64>,
    pub q: Option<f64>,
    pub r0: Option<f64>,
}

impl FamilyArgs {
    pub fn spec(&self) -> Result<ScaleFactorSpec> {
        let spec = match self.family.as_str() {
            "EinsteinDeSitter" | "EdS" => ScaleFactorSpec::EinsteinDeSitter { c: self.c.unwrap_or(1.0) },
            "DeSitter" => ScaleFactorSpec::DeSitter { h: self.h.unwrap_or(1.0) },
            "PowerLaw" => match self.q {
                Some(q) => ScaleFactorSpec::PowerLaw { c: self.c.unwrap_or(1.0), q },
                None => bail!("PowerLaw needs --q"),
            },
            "Static" => ScaleFactorSpec::Static { r0: self.r0.unwrap_or(1.0) },
            other => bail!("unknown family `{other}` (EinsteinDeSitter, DeSitter, PowerLaw, Static)"),
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Serialize)]
struct IntegrabilityOutput<'a> {
    spec: ScaleFactorSpec,
    verdict: &'static str,
    numeric_estimate: f64,
    consistent: bool,
    report: &'a IntegrabilityReport,
}

pub fn cmd_integrability(family: &FamilyArgs, b: f64, out: &mut dyn Write) -> Result<i32> {
    let spec = family.spec()?;
    let report = integrability(&spec, b)?;
    let record = IntegrabilityOutput {
        spec,
        verdict: if report.converges { "converges" } else { "diverges" },
        numeric_estimate: report.numeric_estimate(),
        consistent: report.consistent(),
        report: &report,
    };
    if !record.consistent {
        log::warn!("numeric estimate disagrees with the analytic verdict");
    }
    writeln!(out, "{}", serde_json::to_string_pretty(&record)?)?;
    Ok(EXIT_OK)
}
