//! Shared helpers for the integration suites: random models, fixtures and
//! property checks written independently of the library internals.

#![allow(dead_code)]

use std::f64::consts::PI;
use std::path::PathBuf;

use nalgebra::DMatrix;
use proptest::test_runner::{Config as ProptestConfig, RngSeed};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use srgstab::lti::json::load_model;
use srgstab::lti::{RationalFunction, TransferMatrix};
use srgstab::numrange::{self, Classification, NumrangeConfig};
use srgstab::srg::{self, AlphaMaxConfig};
use srgstab::{CMatrix, CVector, Complex64};

pub type Check = Result<(), String>;

pub fn proptest_config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        rng_seed: RngSeed::Fixed(0x5eed),
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn fixture(name: &str) -> TransferMatrix {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "fixtures", name].iter().collect();
    load_model(path).expect("fixture loads")
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn cmatrix_from(n: usize, parts: &[f64]) -> CMatrix {
    CMatrix::from_fn(n, n, |i, j| c(parts[2 * (i * n + j)], parts[2 * (i * n + j) + 1]))
}

pub fn random_cmatrix(rng: &mut impl Rng, n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |_, _| c(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)))
}

pub fn polymul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Direct polynomial evaluation at `jω`, independent of the library.
pub fn poly_at(coeffs: &[f64], omega: f64) -> Complex64 {
    let s = c(0.0, omega);
    let mut acc = c(0.0, 0.0);
    for &k in coeffs {
        acc = acc * s + k;
    }
    acc
}

pub fn rational_at(num: &[f64], den: &[f64], omega: f64) -> Complex64 {
    poly_at(num, omega) / poly_at(den, omega)
}

/// Proper entry with poles in `Re s ≤ -0.5` and damping ratio above ~0.16.
pub fn random_stable_entry(rng: &mut impl Rng, max_degree: usize) -> RationalFunction {
    let degree = rng.random_range(0..=max_degree);
    let mut den = vec![1.0];
    let mut k = 0;
    while k < degree {
        if degree - k >= 2 && rng.random_bool(0.4) {
            let re = -rng.random_range(0.5..4.0);
            let im = rng.random_range(0.1..3.0);
            den = polymul(&den, &[1.0, -2.0 * re, re * re + im * im]);
            k += 2;
        } else {
            let p = -rng.random_range(0.5..5.0);
            den = polymul(&den, &[1.0, -p]);
            k += 1;
        }
    }
    let num_degree = rng.random_range(0..=degree);
    let num: Vec<f64> = (0..=num_degree).map(|_| rng.random_range(-2.0..2.0)).collect();
    RationalFunction::new(num, den).expect("valid entry")
}

/// Random stable rational model whose realization has at most `max_states` states.
pub fn random_stable_model(rng: &mut impl Rng, n: usize, max_states: usize) -> TransferMatrix {
    let per_entry = (max_states / (n * n)).clamp(0, 3);
    let mut budget = max_states;
    let entries = (0..n)
        .map(|_| {
            (0..n)
                .map(|_| {
                    let e = random_stable_entry(rng, per_entry.min(budget));
                    budget -= e.den_degree();
                    e
                })
                .collect()
        })
        .collect();
    TransferMatrix::rational("random", entries).expect("valid model")
}

pub fn scale_model(h: &TransferMatrix, k: f64) -> TransferMatrix {
    match h.representation() {
        srgstab::lti::Representation::Rational(entries) => TransferMatrix::rational(
            h.name(),
            entries
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|e| RationalFunction::new(e.num().iter().map(|v| v * k).collect(), e.den().to_vec()).unwrap())
                        .collect()
                })
                .collect(),
        )
        .unwrap(),
        _ => unimplemented!("only rational models are scaled"),
    }
}

/// `cos ∠(u, y)` from the definition.
fn cos_angle(u: &CVector, y: &CVector) -> f64 {
    u.dotc(y).re / y.norm()
}

pub fn check_srg_invariants(a: &CMatrix, seed: u64) -> Check {
    let n_samples = 2000;
    let sigma = srg::sigma_max(a);
    let s = srg::srg_sample(a, n_samples, seed).map_err(|e| e.to_string())?;
    for p in &s.points {
        if p.r > sigma + 1e-8 {
            return Err(format!("gain {} above sigma_max {}", p.r, sigma));
        }
        if !(0.0..=PI).contains(&p.alpha) {
            return Err(format!("angle {} outside [0, pi]", p.alpha));
        }
        if (p.witness.norm() - 1.0).abs() > 1e-12 {
            return Err("witness is not a unit vector".into());
        }
        let y = a * &p.witness;
        if (y.norm() - p.r).abs() > 1e-10 * sigma.max(1.0) {
            return Err("gain does not match its witness".into());
        }
        if p.r > 1e-8 * sigma && (cos_angle(&p.witness, &y) - p.alpha.cos()).abs() > 1e-10 {
            return Err("angle does not match its witness".into());
        }
    }
    let rows = s.mirrored();
    let has_pos = rows.iter().any(|r| r[1] > 0.0);
    let has_neg = rows.iter().any(|r| r[1] < 0.0);
    if has_pos != has_neg {
        return Err("exported points are not symmetric".into());
    }

    // positive scaling reuses the same witnesses
    let k = 2.75;
    let scaled = srg::srg_sample(&(a * c(k, 0.0)), n_samples, seed).map_err(|e| e.to_string())?;
    for (p, q) in s.points.iter().zip(&scaled.points) {
        if p.witness != q.witness {
            return Err("scaling changed the witnesses".into());
        }
        if (q.r - k * p.r).abs() > 1e-12 * k * sigma.max(1.0) || (q.alpha - p.alpha).abs() > 1e-9 {
            return Err(format!("scaling broke ({}, {}) -> ({}, {})", p.r, p.alpha, q.r, q.alpha));
        }
    }

    let am = srg::alpha_max(
        a,
        &AlphaMaxConfig {
            seed,
            seed_samples: n_samples,
            starts: 16,
            ..AlphaMaxConfig::default()
        },
    )
    .map_err(|e| e.to_string())?;
    if am.angle < s.max_angle() || am.angle > PI {
        return Err(format!("alpha_max {} below sampled {}", am.angle, s.max_angle()));
    }

    let closure = srg::right_arc_closure(&s);
    if closure.max_gain() != s.max_gain() || closure.max_angle() != s.max_angle() {
        return Err("right-arc closure changed sigma_max or alpha_max".into());
    }
    if !s.points.iter().all(|p| closure.covers(p.r, p.alpha) && closure.covers(p.r, -p.alpha)) {
        return Err("closure does not contain its generators".into());
    }
    Ok(())
}

/// Gain bound with witnesses: the refined sample reaches `σ_max`.
pub fn check_gain_attained(a: &CMatrix, seed: u64) -> Check {
    let sigma = srg::sigma_max(a);
    let mut s = srg::srg_sample(a, 100_000, seed).map_err(|e| e.to_string())?;
    srg::refine_sample(a, &mut s).map_err(|e| e.to_string())?;
    if (s.max_gain() - sigma).abs() > 1e-3 * sigma {
        return Err(format!("max gain {} vs sigma_max {}", s.max_gain(), sigma));
    }
    Ok(())
}

pub fn check_small_gain_separation(a: &CMatrix, seed: u64) -> Check {
    let sigma = srg::sigma_max(a);
    if sigma == 0.0 {
        return Ok(());
    }
    // shrink into the small-gain regime
    let a = a * c(0.95 / sigma, 0.0);
    let sigma = srg::sigma_max(&a);
    let mut s = srg::srg_sample(&a, 1000, seed).map_err(|e| e.to_string())?;
    srg::refine_sample(&a, &mut s).map_err(|e| e.to_string())?;
    let d = srg::tau_ray_distance(&s, srg::TOL_MEMBER);
    if d.membership || d.distance < 1.0 - sigma - 1e-12 {
        return Err(format!("distance {} below 1 - sigma = {}", d.distance, 1.0 - sigma));
    }
    Ok(())
}

pub fn check_subadditivity(a: &CMatrix, b: &CMatrix, seed: u64) -> Check {
    let o = |m: &CMatrix, k: u64| srg::alpha_max_oracle(m, 100_000, seed.wrapping_add(k)).map_err(|e| e.to_string());
    let ab = o(&(a * b), 0)?;
    let (pa, pb) = (o(a, 1)?, o(b, 2)?);
    if ab > pa + pb + 2e-3 {
        return Err(format!("alpha(AB) = {ab} > {pa} + {pb}"));
    }
    Ok(())
}

pub fn check_siso(a: Complex64, seed: u64) -> Check {
    let m = CMatrix::from_element(1, 1, a);
    let s = srg::srg_sample(&m, 100, seed).map_err(|e| e.to_string())?;
    let arg = a.arg().abs();
    for p in &s.points {
        if (p.r - a.norm()).abs() > 1e-12 * a.norm().max(1.0) || (p.alpha - arg).abs() > 1e-9 {
            return Err(format!("point ({}, {}) for scalar {a}", p.r, p.alpha));
        }
    }
    let am = srg::alpha_max(&m, &AlphaMaxConfig { seed, ..AlphaMaxConfig::default() }).map_err(|e| e.to_string())?;
    if (am.angle - arg).abs() > 1e-9 || (srg::sigma_max(&m) - a.norm()).abs() > 1e-12 * a.norm().max(1.0) {
        return Err("scalar alpha_max or sigma_max mismatch".into());
    }
    Ok(())
}

/// Brute-force `α̂_max` must not beat the optimizer by more than 1e-3.
pub fn check_optimizer_vs_oracle(a: &CMatrix, seed: u64) -> Check {
    let opt = srg::alpha_max(a, &AlphaMaxConfig { seed, ..AlphaMaxConfig::default() }).map_err(|e| e.to_string())?;
    let oracle = srg::alpha_max_oracle(a, 100_000, seed ^ 0xabcd).map_err(|e| e.to_string())?;
    if opt.angle < oracle - 1e-3 {
        return Err(format!("optimizer {} below oracle {}", opt.angle, oracle));
    }
    Ok(())
}

/// Distance from `z` to a convex polygon (inside counts as 0), computed from
/// scratch. Vertices must be ordered counter-clockwise about the centroid.
pub fn polygon_distance(poly: &[Complex64], z: Complex64) -> f64 {
    let m = poly.len();
    if m <= 64 {
        return polygon_distance_brute(poly, z);
    }
    // locate the wedge (about the centroid) that contains z, then look at the
    // neighbouring edges only
    let centre = poly.iter().sum::<Complex64>() / m as f64;
    let angle = |p: Complex64| (p - centre).arg();
    let a0 = angle(poly[0]);
    let rel = |p: Complex64| (angle(p) - a0).rem_euclid(2.0 * PI);
    let target = rel(z);
    let k = poly.partition_point(|p| rel(*p) <= target).saturating_sub(1);
    let window: Vec<Complex64> = (0..16).map(|d| poly[(k + m - 8 + d) % m]).collect();
    let mut dmin = f64::INFINITY;
    let mut outside = false;
    for w in window.windows(2) {
        let (a, b) = (w[0], w[1]);
        dmin = dmin.min(segment_distance(a, b, z));
        if ((b - a).conj() * (z - a)).im < 0.0 {
            outside = true;
        }
    }
    if outside {
        dmin
    } else {
        0.0
    }
}

fn segment_distance(a: Complex64, b: Complex64, z: Complex64) -> f64 {
    let ab = b - a;
    let t = if ab.norm_sqr() > 0.0 { ((z - a) * ab.conj()).re / ab.norm_sqr() } else { 0.0 };
    (a + ab * t.clamp(0.0, 1.0) - z).norm()
}

fn polygon_distance_brute(poly: &[Complex64], z: Complex64) -> f64 {
    if poly.len() == 1 {
        return (poly[0] - z).norm();
    }
    let mut inside = poly.len() >= 3;
    let mut dmin = f64::INFINITY;
    for i in 0..poly.len() {
        let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
        dmin = dmin.min(segment_distance(a, b, z));
        if ((b - a).conj() * (z - a)).im < 0.0 {
            inside = false;
        }
    }
    if inside {
        0.0
    } else {
        dmin
    }
}

pub fn check_numrange_invariants(a: &CMatrix, seed: u64) -> Check {
    let nr = numrange::numrange_boundary(a, &NumrangeConfig::default()).map_err(|e| e.to_string())?;
    let scale = srg::sigma_max(a).max(f64::MIN_POSITIVE);
    if !nr.is_convex(1e-10) {
        return Err("boundary is not convex".into());
    }
    let eig = a.clone().eigenvalues().map(|e| e.iter().copied().collect::<Vec<_>>());
    let eig = eig.unwrap_or_else(|| srgstab::linalg::eigenvalues(a).unwrap());
    for l in eig {
        let d = polygon_distance(&nr.boundary, l);
        if d > 1e-8 * scale {
            return Err(format!("eigenvalue {l} is {d} outside W(A)"));
        }
    }
    let mut r = rng(seed);
    let n = a.nrows();
    for _ in 0..10_000 {
        let x = CVector::from_fn(n, |_, _| c(r.sample(rand_distr::StandardNormal), r.sample(rand_distr::StandardNormal)));
        let x = x.unscale(x.norm());
        let z = x.dotc(&(a * &x));
        let d = polygon_distance(&nr.boundary, z);
        if d > 1e-8 * scale {
            return Err(format!("sampled x*Ax = {z} is {d} outside W(A)"));
        }
    }
    if nr.classification == Classification::Sectorial {
        let (smax, smin) = (nr.support_max.unwrap(), nr.support_min.unwrap());
        if nr.contains_zero || smax - smin >= PI {
            return Err("sectorial range contains 0 or opens by pi".into());
        }
        let ph = numrange::sectorial_phases_with(a, &nr).map_err(|e| e.to_string())?;
        if ph.phases.windows(2).any(|w| w[0] < w[1]) {
            return Err("phases not descending".into());
        }
        if ph.max() - ph.min() >= PI {
            return Err("phase spread reaches pi".into());
        }
        if ph.phases.iter().any(|p| *p > smax + 1e-8 || *p < smin - 1e-8) {
            return Err(format!("phases {:?} outside [{smin}, {smax}]", ph.phases));
        }
    }
    Ok(())
}

/// Classification against the sampled hull oracle, skipping near-boundary cases.
pub fn check_classify_vs_sampled(a: &CMatrix, seed: u64) -> Check {
    let nr = numrange::numrange_boundary(a, &NumrangeConfig::coarse()).map_err(|e| e.to_string())?;
    if nr.zero_depth.abs() <= 1e-6 * nr.scale {
        return Ok(());
    }
    let sampled = numrange::contains_zero_sampled(a, 20_000, seed);
    let interior = nr.classification == Classification::NonSectorial;
    if sampled != interior {
        return Err(format!("classification {:?} but sampled oracle says {sampled}", nr.classification));
    }
    Ok(())
}

/// `U diag(e^{jθ_k} r_k) U*` with spread below π and a random rotation.
pub fn random_normal_sectorial(r: &mut impl Rng, n: usize) -> (CMatrix, Vec<f64>) {
    let centre = r.random_range(-PI..PI);
    let spread = r.random_range(0.0..3.0);
    let mut args: Vec<f64> = (0..n).map(|_| centre + spread * (r.random::<f64>() - 0.5)).collect();
    let g = random_cmatrix(r, n);
    let q = g.qr().q();
    let d = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        n,
        args.iter().map(|t| Complex64::from_polar(r.random_range(0.5..2.0), *t)),
    ));
    args.sort_by(|a, b| b.total_cmp(a));
    (&q * d * q.adjoint(), args)
}

pub fn check_normal_phases(a: &CMatrix, args: &[f64]) -> Check {
    let ph = numrange::sectorial_phases(a).map_err(|e| e.to_string())?;
    // compare modulo 2π with the oracle's branch
    for (p, t) in ph.phases.iter().zip(args) {
        let d = (p - t + PI).rem_euclid(2.0 * PI) - PI;
        if d.abs() > 1e-8 {
            return Err(format!("phases {:?} vs eigen-arguments {:?}", ph.phases, args));
        }
    }
    Ok(())
}

pub fn real_matrix(rows: &[&[f64]]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j])
}

#[derive(Debug, Default)]
pub struct AuditOutcome {
    pub pairs: usize,
    pub unstable_loops: usize,
    pub certified: usize,
    pub violations: Vec<String>,
}

/// `0`, then 200 log-spaced points over `[1e-3, 1e3]`.
pub fn audit_grid() -> srgstab::lti::FrequencyGrid {
    let mut pts = vec![0.0];
    pts.extend((0..200).map(|k| 10f64.powf(-3.0 + 6.0 * k as f64 / 199.0)));
    srgstab::lti::FrequencyGrid::from_points(pts).unwrap()
}

/// Random stable `H1`, `H2` (n ≤ 3) with random loop gain; any certificate
/// passing on an unstable closed loop is a violation.
pub fn soundness_audit(n_pairs: usize, seed: u64, cfg: &srgstab::stability::SweepConfig) -> AuditOutcome {
    let grid = audit_grid();
    let mut r = rng(seed);
    let mut out = AuditOutcome::default();
    for k in 0..n_pairs {
        let n = r.random_range(1..=3);
        let g1 = 10f64.powf(r.random_range(-0.7..0.5));
        let g2 = 10f64.powf(r.random_range(-0.7..0.5));
        let h1 = scale_model(&random_stable_model(&mut r, n, 8), g1);
        let h2 = scale_model(&random_stable_model(&mut r, n, 6), g2);
        let report = match srgstab::stability::sweep(&h1, &h2, &grid, cfg) {
            Ok(rep) => rep,
            Err(e) => {
                out.violations.push(format!("pair {k}: sweep failed: {e}"));
                continue;
            }
        };
        let s = srgstab::stability::soundness_of(&report);
        out.pairs += 1;
        if s.oracle_stable == Some(false) {
            out.unstable_loops += 1;
        }
        if !s.passed.is_empty() {
            out.certified += 1;
        }
        if s.oracle_stable.is_none() {
            out.violations.push(format!("pair {k}: oracle unavailable"));
        }
        if s.violation {
            out.violations.push(format!("pair {k}: {:?} passed on an unstable loop", s.passed));
        }
    }
    out
}
