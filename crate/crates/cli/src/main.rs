use std::io;
use std::path::PathBuf;
use std::process::exit;

use clap::{Parser, Subcommand};

use rwb_cli::{
    cmd_integrability, cmd_kinematics, cmd_run, cmd_verify, kinematics_record, FamilyArgs, EXIT_OK, EXIT_USAGE,
};
use rwb_core::estimates::{Suite, SuiteOptions};
use rwb_core::momentum::parse_vec3;
use rwb_core::Representation;

/// Homogeneous relativistic Boltzmann equation on a flat RW background.
#[derive(Parser)]
#[command(name = "rwb", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a configured run and write manifest, snapshots and diagnostics.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a verification suite; exits 3 on any violation.
    Verify {
        /// all, L2_1, L2_2, L2_3, L3_1, L3_2, L3_3, jacobians or omega
        suite: String,
        /// Samples per sampled check (defaults depend on the check).
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Cutoff constant for the energy-defect check; repeatable.
        #[arg(long = "cutoff")]
        cutoffs: Vec<f64>,
        /// Also write the reports as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Evaluate one collision and print it as JSON.
    Kinematics {
        #[arg(long, allow_hyphen_values = true)]
        v: String,
        #[arg(long, allow_hyphen_values = true)]
        u: String,
        /// Collision direction; normalized before use.
        #[arg(long, allow_hyphen_values = true)]
        omega: String,
        #[arg(long = "R")]
        r: f64,
        #[arg(long, default_value = "R")]
        rep: String,
        /// Cutoff constant; reports membership of ω in the cutoff set.
        #[arg(long = "B")]
        cutoff: Option<f64>,
    },
    /// Decide whether ∫ R⁻³ + R^{b−4} dt converges for a scale-factor family.
    Integrability {
        #[arg(long)]
        family: String,
        #[arg(long)]
        b: f64,
        #[arg(long)]
        c: Option<f64>,
        #[arg(long = "H")]
        h: Option<f64>,
        #[arg(long)]
        q: Option<f64>,
        #[arg(long = "R0")]
        r0: Option<f64>,
    },
}

fn configure_threads() -> anyhow::Result<()> {
    let Ok(value) = std::env::var("RWB_THREADS") else { return Ok(()) };
    let n: usize =
        value.trim().parse().map_err(|_| anyhow::anyhow!("RWB_THREADS must be a positive integer, got {value:?}"))?;
    if n == 0 {
        anyhow::bail!("RWB_THREADS must be a positive integer, got 0");
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn dispatch(command: Command) -> anyhow::Result<i32> {
    let mut out = io::stdout().lock();
    match command {
        Command::Run { config, out: dir } => cmd_run(&config, &dir),
        Command::Verify { suite, samples, seed, cutoffs, json } => {
            let suite: Suite = suite.parse()?;
            let mut opts = SuiteOptions { samples, seed, ..SuiteOptions::default() };
            if !cutoffs.is_empty() {
                opts.cutoffs = cutoffs;
            }
            cmd_verify(suite, &opts, json.as_deref(), &mut out)
        }
        Command::Kinematics { v, u, omega, r, rep, cutoff } => {
            let rep: Representation = rep.parse()?;
            let record = kinematics_record(parse_vec3(&v)?, parse_vec3(&u)?, parse_vec3(&omega)?, r, rep, cutoff)?;
            cmd_kinematics(&record, &mut out)
        }
        Command::Integrability { family, b, c, h, q, r0 } => {
            cmd_integrability(&FamilyArgs { family, c, h, q, r0 }, b, &mut out)
        }
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            exit(code);
        }
    };
    let code = configure_threads().and_then(|()| dispatch(cli.command)).unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        EXIT_USAGE
    });
    exit(code);
}
