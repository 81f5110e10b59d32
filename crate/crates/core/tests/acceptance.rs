//! Acceptance criteria for the two worked examples and the property suites.
//! Runs without the libtest harness so every criterion prints its own
//! `[PASS]` / `[FAIL]` line; the process exits nonzero if any criterion fails.

mod common;

use std::f64::consts::PI;
use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use rand::Rng as _;
use srgstab::lti::{make_grid, TransferMatrix};
use srgstab::numrange::{self, Classification, NumrangeConfig};
use srgstab::srg::{self, AlphaMaxConfig};
use srgstab::stability::{self, Certificate, SweepConfig, SweepReport};
use srgstab::CMatrix;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn example_a() -> (TransferMatrix, TransferMatrix) {
    (fixture("exA_h1.json"), fixture("exA_h2.json"))
}

/// First grid frequency where `σ_max(H1) σ_max(H2) < 1`.
fn gain_crossover(h1: &TransferMatrix, h2: &TransferMatrix, lo: f64, hi: f64, ppd: usize) -> Result<Option<f64>, String> {
    let grid = make_grid(lo, hi, ppd, false).map_err(|e| e.to_string())?;
    for &w in grid.points() {
        let s1 = srg::sigma_max(&h1.eval_freq(w).map_err(|e| e.to_string())?);
        let s2 = srg::sigma_max(&h2.eval_freq(w).map_err(|e| e.to_string())?);
        if s1 * s2 < 1.0 {
            return Ok(Some(w));
        }
    }
    Ok(None)
}

fn c1() -> Outcome {
    let (h1, h2) = example_a();
    let w = gain_crossover(&h1, &h2, 1.0, 100.0, 30)?.ok_or("no crossover in [1, 100]")?;
    ensure((19.0..=20.5).contains(&w), || format!("first omega with s1*s2 < 1 is {w:.4}, outside [19.0, 20.5]"))?;
    Ok(format!("crossover at {w:.4}"))
}

fn example_a_full_sweep() -> Result<SweepReport, String> {
    let (h1, h2) = example_a();
    let grid = make_grid(1e-2, 1e3, 30, false).map_err(|e| e.to_string())?;
    let cfg = SweepConfig {
        samples: 20_000,
        alpha: AlphaMaxConfig { starts: 64, ..AlphaMaxConfig::default() },
        ..SweepConfig::default()
    };
    stability::sweep(&h1, &h2, &grid, &cfg).map_err(|e| e.to_string())
}

fn c2(report: &SweepReport) -> Outcome {
    let finite: Vec<_> = report.verdicts.iter().filter(|v| v.omega.value().is_finite()).collect();
    ensure(finite.len() == report.grid.len(), || format!("{} of {} grid points evaluated", finite.len(), report.grid.len()))?;
    if let Some(v) = finite.iter().find(|v| v.alpha1 + v.alpha2 >= PI) {
        return Err(format!("alpha1 + alpha2 = {} at omega = {}", v.alpha1 + v.alpha2, v.omega));
    }
    ensure(report.certified_srg_phase == Certificate::Pass, || format!("certified_srg_phase = {}", report.certified_srg_phase))?;
    let oracle = report.oracle.as_ref().ok_or("oracle missing")?;
    ensure(oracle.stable, || format!("oracle abscissa {:?}", oracle.spectral_abscissa))?;
    let margin = finite.iter().map(|v| v.phase_margin).fold(f64::INFINITY, f64::min);
    Ok(format!("{} points, min phase margin {margin:.4}, abscissa {:.4}", finite.len(), oracle.spectral_abscissa.unwrap_or(f64::NAN)))
}

fn c3() -> Outcome {
    let h1 = fixture("exA_h1.json");
    let cfg = NumrangeConfig::default();
    let class = |w: f64| -> Result<Classification, String> {
        let m = h1.eval_freq(w).map_err(|e| e.to_string())?;
        Ok(numrange::numrange_boundary(&m, &cfg).map_err(|e| e.to_string())?.classification)
    };
    let lo = class(0.1)?;
    ensure(lo == Classification::NonSectorial, || format!("H1(j0.1) is {lo:?}"))?;
    let hi = class(100.0)?;
    ensure(hi == Classification::Sectorial, || format!("H1(j100) is {hi:?}"))?;
    let mut gaps = Vec::new();
    for w in [20.0, 100.0] {
        let m = h1.eval_freq(w).map_err(|e| e.to_string())?;
        let nr_min = numrange::sectorial_phases(&m).map_err(|e| e.to_string())?.min();
        let am = srg::alpha_max(&m, &AlphaMaxConfig::default()).map_err(|e| e.to_string())?.angle;
        let gap = (nr_min + am).abs();
        ensure(gap <= 0.1, || format!("omega = {w}: nr min phase {nr_min:.4} vs -alpha_max {:.4}", -am))?;
        gaps.push(format!("{gap:.4}@{w}"));
    }
    Ok(format!("classes ok, phase gaps {}", gaps.join(" ")))
}

fn c4() -> Outcome {
    let h1 = fixture("exB_h1.json");
    let id = TransferMatrix::identity(4);
    let mut failures = Vec::new();

    // σ_max(H1) decreases through 1 as ω grows
    let w = gain_crossover(&h1, &id, 1e-4, 1e2, 60)?;
    match w {
        Some(w) if (0.03..=0.08).contains(&w) => {}
        other => failures.push(format!("small-gain crossover {other:?} outside [0.03, 0.08]")),
    }

    let cfg = SweepConfig::default();
    let v = stability::verdict_at(&h1, &id, 1e-4, &cfg).map_err(|e| e.to_string())?;
    if v.small_gain_ok || v.srg_phase_ok {
        failures.push(format!(
            "at 1e-4: small_gain_ok = {} (s1 = {:.4}), srg_phase_ok = {} (alpha1 = {:.10})",
            v.small_gain_ok, v.sigma1, v.srg_phase_ok, v.alpha1
        ));
    }

    for w in [1e-8, 1.0, 1e8] {
        let m = h1.eval_freq(w).map_err(|e| e.to_string())?;
        let class = numrange::numrange_boundary(&m, &NumrangeConfig::default()).map_err(|e| e.to_string())?.classification;
        if class != Classification::NonSectorial {
            failures.push(format!("H1(j{w}) is {class:?}"));
        }
    }

    let grid = make_grid(1e-6, 1e4, 30, false).map_err(|e| e.to_string())?;
    let report = stability::sweep(&h1, &id, &grid, &cfg).map_err(|e| e.to_string())?;
    let bad: Vec<_> = report
        .verdicts
        .iter()
        .filter(|v| v.omega.value().is_finite() && !(v.corollary1_ok && v.distance_to_minus_one > 0.0))
        .map(|v| v.omega.to_string())
        .collect();
    if !bad.is_empty() || !report.errors.is_empty() {
        failures.push(format!("corollary1 fails at {bad:?}, {} frequencies not evaluated", report.errors.len()));
    }
    let min_dist = report.verdicts.iter().map(|v| v.distance_to_minus_one).fold(f64::INFINITY, f64::min);

    if failures.is_empty() {
        Ok(format!("crossover {w:?}, corollary1 min distance {min_dist:.4}"))
    } else {
        Err(format!("{}; corollary1 min distance {min_dist:.4}", failures.join("; ")))
    }
}

fn c5() -> Outcome {
    let a = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0, 0.0), c(2.0, 0.0)]));
    let want = (1.0f64 / 3.0).asin();
    let got = srg::alpha_max(&a, &AlphaMaxConfig::default()).map_err(|e| e.to_string())?.angle;
    ensure((got - want).abs() <= 2e-3, || format!("alpha_max {got} vs {want}"))?;
    let s = srg::srg_sample(&a, 20_000, 0).map_err(|e| e.to_string())?;
    let worst = s.points.iter().map(|p| ((p.z() - c(1.5, 0.0)).norm() - 0.5).abs()).fold(0.0, f64::max);
    ensure(worst <= 1e-9, || format!("circle deviation {worst:e}"))?;
    Ok(format!("alpha_max error {:.2e}, circle deviation {worst:.1e}", (got - want).abs()))
}

fn random_matrix(r: &mut impl rand::Rng, max_n: usize) -> CMatrix {
    let n = r.random_range(1..=max_n);
    let parts: Vec<f64> = (0..2 * n * n).map(|_| r.random_range(-2.0..2.0)).collect();
    cmatrix_from(n, &parts)
}

fn c6() -> Outcome {
    let mut r = rng(0xacce);
    let mut failures = Vec::new();
    let mut record = |suite: &str, k: usize, res: Result<(), String>| {
        if let Err(e) = res {
            failures.push(format!("{suite}[{k}]: {e}"));
        }
    };
    for k in 0..200 {
        let a = random_matrix(&mut r, 4);
        record("srg invariants", k, check_srg_invariants(&a, k as u64));
    }
    for k in 0..200 {
        let a = random_matrix(&mut r, 5);
        record("numrange", k, check_numrange_invariants(&a, k as u64));
    }
    for k in 0..200 {
        let n = r.random_range(1..=5);
        let (a, args) = random_normal_sectorial(&mut r, n);
        record("normal phases", k, check_normal_phases(&a, &args));
    }
    for k in 0..200 {
        let n = r.random_range(1..=3);
        let parts = |r: &mut rand_chacha::ChaCha8Rng| -> Vec<f64> { (0..2 * n * n).map(|_| r.random_range(-2.0..2.0)).collect() };
        let (a, b) = (cmatrix_from(n, &parts(&mut r)), cmatrix_from(n, &parts(&mut r)));
        record("subadditivity", k, check_subadditivity(&a, &b, k as u64));
    }
    for k in 0..200 {
        let a = random_matrix(&mut r, 4);
        record("small-gain separation", k, check_small_gain_separation(&a, k as u64));
    }
    let audit_cfg = SweepConfig {
        samples: 500,
        alpha: AlphaMaxConfig { starts: 16, seed_samples: 2000, ..AlphaMaxConfig::default() },
        ..SweepConfig::default()
    };
    let audit = soundness_audit(100, 0x50d, &audit_cfg);
    failures.extend(audit.violations.iter().map(|v| format!("audit: {v}")));
    if audit.pairs != 100 {
        failures.push(format!("audit ran {} of 100 pairs", audit.pairs));
    }
    let summary = format!("audit: {} pairs, {} unstable, {} certified", audit.pairs, audit.unstable_loops, audit.certified);
    if failures.is_empty() {
        Ok(format!("5 x 200 property cases ok; {summary}"))
    } else {
        Err(format!("{} failures, first: {}; {summary}", failures.len(), failures[0]))
    }
}

fn c7(first: &SweepReport) -> Outcome {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(4).build().map_err(|e| e.to_string())?;
    let second = pool.install(example_a_full_sweep)?;
    let (a, b) = (first.to_json(), second.to_json());
    ensure(a == b, || "reports differ between runs".into())?;
    ensure(first.to_csv() == second.to_csv(), || "csv differs between runs".into())?;
    Ok(format!("{} bytes identical (default pool vs 4 threads)", a.len()))
}

struct Criterion {
    id: &'static str,
    what: &'static str,
    budget: Duration,
}

fn run(c: &Criterion, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let res = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    });
    let took = start.elapsed();
    let res = match res {
        Ok(msg) if took > c.budget => Err(format!("{msg}; took {took:.1?}, budget {:?}", c.budget)),
        other => other,
    };
    let (tag, msg) = match &res {
        Ok(m) => ("PASS", m),
        Err(m) => ("FAIL", m),
    };
    println!("[{tag}] {} {}: {msg} ({took:.1?})", c.id, c.what);
    res.is_ok()
}

fn main() -> ExitCode {
    // quiet the default hook; panics are reported on the criterion line
    panic::set_hook(Box::new(|_| {}));
    let secs = Duration::from_secs;
    let mut ok = true;
    ok &= run(&Criterion { id: "C1", what: "example A small-gain crossover", budget: secs(10) }, c1);

    let start = Instant::now();
    let report = panic::catch_unwind(example_a_full_sweep);
    let sweep_time = start.elapsed();
    let report = match report {
        Ok(Ok(r)) => Some(r),
        Ok(Err(e)) => {
            println!("example A sweep failed: {e}");
            None
        }
        Err(_) => None,
    };
    ok &= run(&Criterion { id: "C2", what: "example A SRG small-phase sweep", budget: secs(300) }, || {
        let r = report.as_ref().ok_or("sweep failed")?;
        let msg = c2(r)?;
        if sweep_time > secs(300) {
            return Err(format!("{msg}; sweep took {sweep_time:.1?}"));
        }
        Ok(format!("{msg}, sweep {sweep_time:.1?}"))
    });
    ok &= run(&Criterion { id: "C3", what: "example A sectoriality", budget: secs(10) }, c3);
    ok &= run(&Criterion { id: "C4", what: "example B thresholds", budget: secs(600) }, c4);
    ok &= run(&Criterion { id: "C5", what: "diag(1, 2) geometry", budget: secs(5) }, c5);
    ok &= run(&Criterion { id: "C6", what: "property suites", budget: secs(600) }, c6);
    ok &= run(&Criterion { id: "C7", what: "determinism", budget: secs(600) }, || c7(report.as_ref().ok_or("sweep failed")?));

    if ok {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: some criteria failed");
        ExitCode::FAILURE
    }
}
