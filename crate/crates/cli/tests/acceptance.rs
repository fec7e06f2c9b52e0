//! Acceptance criteria AC-1 to AC-9. Each test writes one line
//! `AC-k PASS|FAIL ...` to stderr (outside the test harness capture) and
//! fails when its criterion is not met. The tests hold a shared lock so
//! that runtimes are measured one at a time.

use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;

use rwb_core::collision::{Invariant, PairScreen};
use rwb_core::cosmology::integrability;
use rwb_core::estimates::{
    verify_integral_bounds, verify_jacobian_bounds, CheckReport, IntegralCheck, IntegralGrid, DEFAULT_JACOBIAN_SAMPLES,
    INTEGRAL_R_LIST, JACOBIAN_R_LIST,
};
use rwb_core::sampling::{chunk_rng, chunks, gaussian_vec, unit_vec, SampleRng};
use rwb_core::solver::richardson_ratio;
use rwb_core::{
    AngularMode, CollisionOperator, CollisionPair, DistributionField, EquilibriumParams, KernelParams, McSpec,
    QuadratureSpec, ReferenceKernel, RepMode, ScaleFactorSpec, UIntegration, VGrid, Vec3,
};

static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn verdict(id: &str, ok: bool, detail: &str) {
    let line = format!("{id} {} {detail}\n", if ok { "PASS" } else { "FAIL" });
    // Written to the raw handle so the line shows without --nocapture.
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(ok, "{id} failed: {detail}");
}

const R_LIST: [f64; 4] = [1.0, 2.0, 10.0, 1e3];

/// Momentum with a log-uniform scale in `[0.01, 100]`.
fn momentum(rng: &mut SampleRng) -> Vec3 {
    let scale = 10f64.powf(-2.0 + 4.0 * rng.random::<f64>());
    gaussian_vec(rng, scale)
}

/// Maxima of the per-sample errors returned by `body`, over `n` samples in
/// fixed chunks.
fn max_over<const K: usize>(n: usize, seed: u64, body: impl Fn(&mut SampleRng, usize) -> [f64; K] + Sync) -> [f64; K] {
    let parts: Vec<_> = chunks(n, 4096).collect();
    parts
        .into_par_iter()
        .map(|(c, range)| {
            let mut rng = chunk_rng(seed, c);
            let mut worst = [0.0f64; K];
            for i in range {
                for (w, e) in worst.iter_mut().zip(body(&mut rng, i)) {
                    *w = w.max(if e.is_nan() { f64::INFINITY } else { e });
                }
            }
            worst
        })
        .reduce(|| [0.0; K], |a, b| std::array::from_fn(|k| a[k].max(b[k])))
}

fn pair_errors(p: &CollisionPair, vp: Vec3, vp0: f64) -> [f64; 4] {
    let r = p.r;
    let up = p.n - vp;
    let up0 = p.n0 - vp0;
    let lift = |x: &Vec3| (1.0 + x.norm_squared() / (r * r)).sqrt();
    let energy = ((vp0 + up0) - p.n0).abs() / p.n0;
    let mscale = (p.v.norm() + p.u.norm()).max(f64::MIN_POSITIVE);
    let momentum = ((vp + up) - p.n).norm() / mscale;
    let shell = ((vp0 - lift(&vp)).abs() / vp0).max((up0 - lift(&up)).abs() / up0);
    let after = CollisionPair::from_vecs(vp, up, r).map(|q| q.g).unwrap_or(f64::NAN);
    let g_inv = (after - p.g).abs() / p.sqrt_s;
    [energy, momentum, shell, g_inv]
}

#[test]
fn ac1_conservation() {
    let _guard = serial();
    let start = Instant::now();
    let n = 1_000_000;
    let mut worst = [0.0f64; 4];
    for (k, rs) in [false, true].into_iter().enumerate() {
        let e = max_over(n, 100 + k as u64, |rng, i| {
            let r = R_LIST[i % R_LIST.len()];
            let (v, u, w) = (momentum(rng), momentum(rng), unit_vec(rng));
            let p = CollisionPair::from_vecs(v, u, r).expect("on-shell pair");
            let (vp, vp0) = if rs { p.post_omega_rs_raw(&w) } else { p.post_omega_r_raw(&w) };
            pair_errors(&p, vp, vp0)
        });
        worst = std::array::from_fn(|j| worst[j].max(e[j]));
    }
    let elapsed = start.elapsed();
    let max = worst.iter().copied().fold(0.0, f64::max);
    let ok = max <= 1e-9 && elapsed < Duration::from_secs(30);
    verdict(
        "AC-1",
        ok,
        &format!(
            "energy {:.2e} momentum {:.2e} shell {:.2e} g {:.2e} (tol 1e-9), {n} samples x 2 reps in {elapsed:.1?} (limit 30s)",
            worst[0], worst[1], worst[2], worst[3]
        ),
    );
}

#[test]
fn ac2_cross_representation() {
    let _guard = serial();
    let start = Instant::now();
    let n = 100_000;
    let [dv, dv0] = max_over(n, 200, |rng, i| {
        let r = R_LIST[i % R_LIST.len()];
        let (v, u, w) = (momentum(rng), momentum(rng), unit_vec(rng));
        let p = CollisionPair::from_vecs(v, u, r).expect("on-shell pair");
        let (a, a0) = p.post_omega_r_raw(&w);
        let (b, b0) = p.post_omega_rs_raw(&p.omega_hat_raw(&w));
        let scale = (v.norm() + u.norm()).max(f64::MIN_POSITIVE);
        [(a - b).norm() / scale, (a0 - b0).abs() / p.n0]
    });
    let elapsed = start.elapsed();
    let ok = dv <= 1e-10 && dv0 <= 1e-10 && elapsed < Duration::from_secs(10);
    verdict(
        "AC-2",
        ok,
        &format!("max rel |dv'| {dv:.2e}, |dv'0| {dv0:.2e} (tol 1e-10), {n} samples in {elapsed:.1?} (limit 10s)"),
    );
}

#[test]
fn ac3_lemma_suite() {
    let _guard = serial();
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("reports.json");
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_rwb"))
        .args(["verify", "all", "--json", json.to_str().unwrap()])
        .env("RUST_LOG", "warn")
        .output()
        .unwrap();
    let elapsed = start.elapsed();
    let reports: Vec<CheckReport> = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    let find = |id: &str| reports.iter().find(|r| r.lemma_id == id).unwrap_or_else(|| panic!("no report {id}"));
    let identities = find("L2_2_identities");
    let present = ["L2_1", "L2_2_bounds", "L3_1(B=0.1)", "L3_1(B=1)", "L3_1(B=10)", "Omega_relation"]
        .iter()
        .all(|id| find(id).samples_run == 1_000_000);
    let violations: u64 = reports.iter().map(|r| r.violations).sum();
    let ok = out.status.code() == Some(0)
        && violations == 0
        && present
        && identities.samples_run == 10_000
        && identities.max_slack <= 1e-6
        && elapsed < Duration::from_secs(300);
    verdict(
        "AC-3",
        ok,
        &format!(
            "{} checks, {violations} violations, FD max rel error {:.2e} (tol 1e-6), exit {:?}, {elapsed:.1?} (limit 300s)",
            reports.len(),
            identities.max_slack,
            out.status.code()
        ),
    );
}

#[test]
fn ac4_flux_integral_scaling() {
    let _guard = serial();
    let mut parts = Vec::new();
    let mut ok = true;
    for beta in [0.0, 1.0, 2.0, 3.0] {
        let study =
            verify_integral_bounds(IntegralCheck::L3_3 { beta }, IntegralGrid::default(), &INTEGRAL_R_LIST).unwrap();
        let e = study.exponent.unwrap();
        let (target, tol) = if beta <= 1.0 { (0.0, 0.1) } else { (beta - 1.0, 0.15) };
        let pass = (e - target).abs() <= tol;
        ok &= pass;
        parts.push(format!("beta={beta}: e={e:.3} (want {target}±{tol}{})", if pass { "" } else { " x" }));
    }
    verdict("AC-4", ok, &parts.join(", "));
}

#[test]
fn ac5_jacobian_constants() {
    let _guard = serial();
    let study = verify_jacobian_bounds(DEFAULT_JACOBIAN_SAMPLES, 0, &JACOBIAN_R_LIST).unwrap();
    let metric = |report: &str, key: &str| study.reports.iter().find(|r| r.lemma_id == report).unwrap().metrics[key];
    let s4 = metric("L3_4", "spread_L3_4");
    let s5 = metric("L3_5", "spread_L3_5");
    let growth = study.growth.iter().map(|(_, g)| *g).fold(0.0, f64::max);
    let fmt = |b: &str| study.constants[b].iter().map(|(r, c)| format!("R={r}:{c:.3}")).collect::<Vec<_>>().join(" ");
    let ok = s4 <= 0.3 && s5 <= 0.3 && growth <= 1.1;
    verdict(
        "AC-5",
        ok,
        &format!(
            "spread L3_4 {s4:.3} [{}], L3_5 {s5:.3} [{}] (tol 0.3), case-3 doubling ratio {growth:.3} (tol 1.1)",
            fmt("L3_4"),
            fmt("L3_5")
        ),
    );
}

#[test]
fn ac6_detailed_balance() {
    let _guard = serial();
    let start = Instant::now();
    let grid = VGrid::new(4.0, 32).unwrap();
    let r = 1.0;
    let eq = EquilibriumParams { alpha: 0.0, beta: Vec3::zeros(), gamma: 2.0 };
    let f = DistributionField::equilibrium(&eq, r, grid).unwrap();
    let kernel =
        ReferenceKernel::new(KernelParams::new(1.0, 1.0, 1.0, 1.0, AngularMode::SmoothCutoff { width: 0.25 }).unwrap());
    // The field is even in each coordinate, so one octant carries every
    // value of |Q|; every third node of it per axis.
    let octant: Vec<usize> = (16..32).step_by(3).collect();
    let mut nodes = Vec::new();
    for &i in &octant {
        for &j in &octant {
            for &k in &octant {
                nodes.push(grid.index(i, j, k));
            }
        }
    }
    let max_q = |m: usize| {
        let op =
            CollisionOperator::new(kernel, QuadratureSpec::new(m, UIntegration::ReuseGrid), RepMode::OmegaR).unwrap();
        let splits = op.split_nodes(&f, &nodes, r).unwrap();
        let q = splits.iter().map(|s| s.total().abs()).fold(0.0, f64::max);
        let loss = splits.iter().map(|s| s.loss).fold(0.0, f64::max);
        (q, loss)
    };
    let (q12, loss) = max_q(12);
    let (q48, _) = max_q(48);
    let reduction = q12 / q48;

    let op = CollisionOperator::new(kernel, QuadratureSpec::new(12, UIntegration::ReuseGrid), RepMode::OmegaR).unwrap();
    let mut bracket: f64 = 0.0;
    for (s, phi) in [Invariant::One, Invariant::V1, Invariant::V2, Invariant::V3, Invariant::V0].into_iter().enumerate()
    {
        let e = op.weak_moment(&f, phi, r, &McSpec { nsamples: 100_000, seed: s as u64 }).unwrap();
        bracket = bracket.max(e.max_bracket);
    }
    let elapsed = start.elapsed();
    let ok = reduction >= 3.0 && bracket <= 1e-10 && elapsed < Duration::from_secs(600);
    verdict(
        "AC-6",
        ok,
        &format!(
            "max|Q| m=12 {q12:.4e}, m=48 {q48:.4e}, reduction {reduction:.3} (need >= 3; max loss {loss:.3e}), \
             max MC bracket {bracket:.2e} (tol 1e-10), {} nodes, {elapsed:.1?} (limit 600s)",
            nodes.len()
        ),
    );
}

#[test]
fn ac7_small_data_run() {
    let _guard = serial();
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/ac7.cfg");
    let dir = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_rwb"))
        .args(["run", config.to_str().unwrap(), "--out", dir.path().to_str().unwrap()])
        .env("RUST_LOG", "warn")
        .output()
        .unwrap();
    let elapsed = start.elapsed();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let diag: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("diagnostics.json")).unwrap()).unwrap();
    let records = diag["records"].as_array().unwrap();
    let get = |i: usize, k: &str| records[i][k].as_f64().unwrap();
    let norm0 = diag["initial_norm"].as_f64().unwrap();
    let mass0 = get(0, "mass");
    let cert0 = get(0, "decay_certificate");
    let last = records.len() - 1;
    let norm_ratio = get(last, "running_norm") / norm0;
    let clamp_frac = get(last, "clamped_mass") / mass0;
    let cert_ratio = (0..records.len()).map(|i| get(i, "decay_certificate") / cert0).fold(0.0, f64::max);
    let t_end = get(last, "t");
    let ok = (t_end - 10.0).abs() < 1e-9
        && norm_ratio <= 2.0
        && clamp_frac < 0.005
        && cert_ratio <= 2.0
        && elapsed < Duration::from_secs(1200);
    verdict(
        "AC-7",
        ok,
        &format!(
            "t_end {t_end}, running norm / initial {norm_ratio:.4} (<= 2), clamped mass fraction {clamp_frac:.2e} (< 5e-3), \
             max certificate / initial {cert_ratio:.4} (<= 2), {} snapshots, {elapsed:.1?} (limit 1200s)",
            records.len()
        ),
    );
}

#[test]
fn ac8_integrability_matrix() {
    let _guard = serial();
    let eds = ScaleFactorSpec::EinsteinDeSitter { c: 1.0 };
    let pl = ScaleFactorSpec::PowerLaw { c: 1.0, q: 0.4 };
    let ds = ScaleFactorSpec::DeSitter { h: 1.0 };
    // 2.99 stands in for b → 3⁻.
    let cases =
        [(eds, 2.0, true), (eds, 2.75, false), (pl, 1.0, true), (pl, 2.99, false), (ds, 0.0, true), (ds, 2.9, true)];
    let mut ok = true;
    let mut parts = Vec::new();
    for (spec, b, expect) in cases {
        let rep = integrability(&spec, b).unwrap();
        let pass = rep.converges == expect && rep.consistent();
        ok &= pass;
        parts.push(format!(
            "{} b={b}: {}{}",
            spec.name(),
            if rep.converges { "conv" } else { "div" },
            if pass { "" } else { " x" }
        ));
    }
    verdict("AC-8", ok, &format!("{} (analytic and numeric agree)", parts.join(", ")));
}

#[test]
fn ac9_orders() {
    let _guard = serial();
    let grid = VGrid::new(3.0, 8).unwrap();
    let (f, _) = DistributionField::gaussian_initial_data(0.05, 2.0, grid).unwrap();
    let kernel = KernelParams::new(1.0, 1.0, 1.0, 1.0, AngularMode::SmoothCutoff { width: 0.25 }).unwrap();
    let mut quad = QuadratureSpec::new(6, UIntegration::ReuseGrid);
    quad.screen = None::<PairScreen>;
    let op = CollisionOperator::new(ReferenceKernel::new(kernel), quad, RepMode::OmegaR).unwrap();
    // Order of the integrator on the autonomous problem (frozen R). Under
    // expansion the discrete operator is only piecewise smooth in R, so the
    // EdS ratio is reported but not judged.
    let ratio = richardson_ratio(&op, &f, 0.0, 0.25, &|_| Ok(1.0)).unwrap();
    let cosmo = ScaleFactorSpec::EinsteinDeSitter { c: 1.0 };
    let eds_ratio = richardson_ratio(&op, &f, 0.0, 0.25, &|t| cosmo.r(t)).unwrap();

    let smooth = |v: &Vec3| (-v.norm_squared()).exp() * (1.0 + 0.5 * v.x);
    let probes: Vec<Vec3> = (0..2000)
        .map(|k| {
            let t = k as f64;
            Vec3::new(3.0 * (0.7 * t).sin(), 3.0 * (1.3 * t + 0.4).cos(), 3.0 * (2.1 * t + 1.0).sin())
        })
        .collect();
    let err = |n: usize| {
        let field = DistributionField::from_fn(VGrid::new(4.0, n).unwrap(), smooth);
        probes.iter().map(|p| (field.interpolate_vec(p) - smooth(p)).abs()).fold(0.0, f64::max)
    };
    let (e1, e2, e3) = (err(33), err(65), err(129));
    let slope = (e1 / e2).log2().min((e2 / e3).log2());
    let ok = (10.0..=24.0).contains(&ratio) && slope >= 1.9;
    verdict(
        "AC-9",
        ok,
        &format!(
            "RK4 Richardson ratio {ratio:.2} at frozen R (in [10, 24]; EdS background {eds_ratio:.2}, not judged), \
             interpolation slope {slope:.3} (>= 1.9)"
        ),
    );
}
