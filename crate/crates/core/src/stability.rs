//! Per-frequency stability conditions, grid certificates and the
//! reconciliation against the closed-loop eigenvalue oracle.
//!
//! Every certificate is grid-certified: it covers the frequencies that were
//! evaluated (plus the `ω = ∞` sample), not the continuum.

use std::f64::consts::PI;
use std::fmt;

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::lti::{self, FrequencyGrid, OracleVerdict, TransferMatrix};
use crate::numrange::{self, Classification, NumrangeConfig, SectorialPhases};
use crate::rng::{self, Purpose};
use crate::srg::{self, AlphaMaxConfig, TOL_MEMBER};
use crate::{linalg, CMatrix, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    /// Random SRG samples per system and frequency.
    pub samples: usize,
    /// Optimizer settings; `seed` and `seed_samples` are overridden per frequency.
    pub alpha: AlphaMaxConfig,
    pub numrange: NumrangeConfig,
    pub seed: u64,
    pub tol_stab: f64,
    pub tol_member: f64,
    pub include_infinity: bool,
    /// Search between grid points for loop eigenvalues approaching `(-∞, -1]`.
    pub refine_corollary1: bool,
    pub run_oracle: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            samples: 20_000,
            alpha: AlphaMaxConfig::default(),
            numrange: NumrangeConfig::coarse(),
            seed: 0,
            tol_stab: lti::TOL_STAB,
            tol_member: TOL_MEMBER,
            include_infinity: true,
            refine_corollary1: true,
            run_oracle: true,
        }
    }
}

/// A frequency, possibly the synthetic `ω = ∞` sample (serialized as `"inf"`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Omega {
    Finite(f64),
    Infinity,
}

impl Omega {
    pub fn value(self) -> f64 {
        match self {
            Omega::Finite(w) => w,
            Omega::Infinity => f64::INFINITY,
        }
    }

    fn seed_index(self) -> u64 {
        self.value().to_bits()
    }
}

impl fmt::Display for Omega {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Omega::Finite(w) => write!(f, "{w}"),
            Omega::Infinity => f.write_str("inf"),
        }
    }
}

impl Serialize for Omega {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Omega::Finite(w) => s.serialize_f64(*w),
            Omega::Infinity => s.serialize_str("inf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyVerdict {
    pub omega: Omega,
    pub sigma1: f64,
    pub sigma2: f64,
    /// `α̂_max` of each system.
    pub alpha1: f64,
    pub alpha2: f64,
    pub nr_phases1: Option<SectorialPhases>,
    pub nr_phases2: Option<SectorialPhases>,
    pub class1: Classification,
    pub class2: Classification,
    pub small_gain_ok: bool,
    pub srg_phase_ok: bool,
    /// Absent unless both systems are sectorial here.
    pub classic_phase_ok: Option<bool>,
    pub corollary1_ok: bool,
    /// Distance from `-1` to `τ SRG(H1 H2)`, `τ ∈ (0, 1]`, over the sampled points.
    pub distance_to_minus_one: f64,
    /// `1 − σ1 σ2`.
    pub gain_margin: f64,
    /// `π − (α1 + α2)`.
    pub phase_margin: f64,
}

/// All five conditions at a single finite frequency.
pub fn verdict_at(h1: &TransferMatrix, h2: &TransferMatrix, omega: f64, cfg: &SweepConfig) -> Result<FrequencyVerdict> {
    check_pair(h1, h2)?;
    let m1 = h1.eval_freq(omega)?;
    let m2 = h2.eval_freq(omega)?;
    verdict_from_matrices(&m1, &m2, Omega::Finite(omega), cfg)
}

/// Conditions at `ω = ∞`, from the high-frequency limits.
pub fn verdict_at_infinity(h1: &TransferMatrix, h2: &TransferMatrix, cfg: &SweepConfig) -> Result<FrequencyVerdict> {
    check_pair(h1, h2)?;
    verdict_from_matrices(&h1.eval_infinity(), &h2.eval_infinity(), Omega::Infinity, cfg)
}

fn check_pair(h1: &TransferMatrix, h2: &TransferMatrix) -> Result<()> {
    if h1.n() != h2.n() {
        return Err(Error::Dimension(format!("H1 is {0}x{0} but H2 is {1}x{1}", h1.n(), h2.n())));
    }
    Ok(())
}

/// Random streams are keyed by the frequency value, so a verdict does not
/// depend on the grid it was computed in.
pub fn verdict_from_matrices(m1: &CMatrix, m2: &CMatrix, omega: Omega, cfg: &SweepConfig) -> Result<FrequencyVerdict> {
    let key = omega.seed_index();
    let alpha_cfg = |purpose| AlphaMaxConfig {
        seed: rng::split_seed(cfg.seed, key, purpose),
        seed_samples: cfg.samples,
        ..cfg.alpha.clone()
    };
    let sigma1 = srg::sigma_max(m1);
    let sigma2 = srg::sigma_max(m2);
    let alpha1 = srg::alpha_max(m1, &alpha_cfg(Purpose::AlphaH1))?.angle;
    let alpha2 = srg::alpha_max(m2, &alpha_cfg(Purpose::AlphaH2))?.angle;

    let nr1 = numrange::numrange_boundary(m1, &cfg.numrange)?;
    let nr2 = numrange::numrange_boundary(m2, &cfg.numrange)?;
    let phases = |m: &CMatrix, nr: &numrange::NumericalRange| match nr.classification {
        Classification::Sectorial => numrange::sectorial_phases_with(m, nr).map(Some),
        _ => Ok(None),
    };
    let nr_phases1 = phases(m1, &nr1)?;
    let nr_phases2 = phases(m2, &nr2)?;
    let classic_phase_ok = match (&nr_phases1, &nr_phases2) {
        (Some(p1), Some(p2)) => Some(p1.max() + p2.max() < PI && p1.min() + p2.min() > -PI),
        _ => None,
    };

    let lp = m1 * m2;
    let mut sample = srg::srg_sample(&lp, cfg.samples, rng::split_seed(cfg.seed, key, Purpose::SrgLoop))?;
    srg::refine_sample(&lp, &mut sample)?;
    let tau = srg::tau_ray_distance(&sample, cfg.tol_member);

    Ok(FrequencyVerdict {
        omega,
        sigma1,
        sigma2,
        alpha1,
        alpha2,
        nr_phases1,
        nr_phases2,
        class1: nr1.classification,
        class2: nr2.classification,
        small_gain_ok: sigma1 * sigma2 < 1.0,
        srg_phase_ok: alpha1 + alpha2 < PI,
        classic_phase_ok,
        corollary1_ok: !tau.membership,
        distance_to_minus_one: tau.distance,
        gain_margin: 1.0 - sigma1 * sigma2,
        phase_margin: PI - (alpha1 + alpha2),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Certificate {
    Pass,
    Fail,
    Inconclusive,
}

impl Certificate {
    pub fn passed(self) -> bool {
        self == Certificate::Pass
    }
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Certificate::Pass => "pass",
            Certificate::Fail => "fail",
            Certificate::Inconclusive => "inconclusive",
        })
    }
}

/// First frequency at which each criterion fails (or, for the classic test,
/// the first non-sectorial frequency).
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Witnesses {
    pub small_gain: Option<Omega>,
    pub srg_phase: Option<Omega>,
    pub classic_phase: Option<Omega>,
    pub mixed: Option<Omega>,
    pub corollary1: Option<Omega>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyError {
    pub omega: Omega,
    pub message: String,
    /// Pole on the imaginary axis: the point is skipped instead of blocking
    /// certification.
    pub skipped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub grid: FrequencyGrid,
    pub verdicts: Vec<FrequencyVerdict>,
    pub errors: Vec<FrequencyError>,
    pub omega_alpha: Vec<Omega>,
    pub omega_sigma: Vec<Omega>,
    pub certified_small_gain: Certificate,
    pub certified_srg_phase: Certificate,
    pub certified_classic_phase: Certificate,
    pub certified_mixed: Certificate,
    pub certified_corollary1: Certificate,
    pub witnesses: Witnesses,
    /// Smallest eigenvalue-based τ-distance found between grid points.
    pub corollary1_refined_distance: Option<f64>,
    pub oracle: Option<OracleVerdict>,
    pub warnings: Vec<String>,
}

impl SweepReport {
    pub fn certificates(&self) -> [(&'static str, Certificate); 5] {
        [
            ("small_gain", self.certified_small_gain),
            ("srg_phase", self.certified_srg_phase),
            ("classic_phase", self.certified_classic_phase),
            ("mixed", self.certified_mixed),
            ("corollary1", self.certified_corollary1),
        ]
    }

    pub fn any_certificate_passed(&self) -> bool {
        self.certificates().iter().any(|(_, c)| c.passed())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Per-frequency table; `classic_ok` is `na` where undefined.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("omega,sigma1,sigma2,alpha1,alpha2,sg_ok,srgph_ok,classic_ok,cor1_ok,dist\n");
        for v in &self.verdicts {
            let classic = v.classic_phase_ok.map_or("na".to_string(), |b| b.to_string());
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                v.omega,
                v.sigma1,
                v.sigma2,
                v.alpha1,
                v.alpha2,
                v.small_gain_ok,
                v.srg_phase_ok,
                classic,
                v.corollary1_ok,
                v.distance_to_minus_one
            ));
        }
        out
    }
}

/// Evaluates the grid (in parallel) plus the `ω = ∞` sample and aggregates
/// the certificates.
pub fn sweep(h1: &TransferMatrix, h2: &TransferMatrix, grid: &FrequencyGrid, cfg: &SweepConfig) -> Result<SweepReport> {
    check_pair(h1, h2)?;
    let mut warnings = Vec::new();
    let mut blocked = false;
    for (label, h) in [("H1", h1), ("H2", h2)] {
        let v = h.is_rh_inf(cfg.tol_stab)?;
        if v.in_rh_inf {
            continue;
        }
        if !v.proper {
            blocked = true;
            warnings.push(format!("{label} is not proper; certificates are inconclusive"));
        } else if v.has_unstable_pole(cfg.tol_stab) {
            blocked = true;
            warnings.push(format!(
                "{label} has an unstable pole at {}; certificates are inconclusive",
                v.offending_pole.map_or("?".into(), |p| p.to_string())
            ));
        } else {
            warnings.push(format!(
                "{label} has a pole on the imaginary axis at {}; it is not in RH-infinity and the grid certificates assume marginal poles are harmless",
                v.offending_pole.map_or("?".into(), |p| p.to_string())
            ));
        }
    }

    let mut results: Vec<(Omega, Result<FrequencyVerdict>)> = grid
        .points()
        .par_iter()
        .map(|&w| (Omega::Finite(w), verdict_at(h1, h2, w, cfg)))
        .collect();
    if cfg.include_infinity {
        results.push((Omega::Infinity, verdict_at_infinity(h1, h2, cfg)));
    }

    let mut verdicts = Vec::with_capacity(results.len());
    let mut errors = Vec::new();
    for (omega, r) in results {
        match r {
            Ok(v) => verdicts.push(v),
            Err(e) => {
                let skipped = matches!(e, Error::PoleOnAxis { .. });
                if skipped {
                    warnings.push(format!("skipped omega = {omega}: {e}"));
                } else {
                    blocked = true;
                }
                errors.push(FrequencyError {
                    omega,
                    message: e.to_string(),
                    skipped,
                });
            }
        }
    }

    let all = |f: &dyn Fn(&FrequencyVerdict) -> bool| -> (Certificate, Option<Omega>) {
        match verdicts.iter().find(|v| !f(v)) {
            Some(v) => (Certificate::Fail, Some(v.omega)),
            None => (Certificate::Pass, None),
        }
    };
    let (mut small_gain, w_sg) = all(&|v| v.small_gain_ok);
    let (mut srg_phase, w_ph) = all(&|v| v.srg_phase_ok);
    let (mut mixed, w_mx) = all(&|v| v.small_gain_ok || v.srg_phase_ok);
    let (mut corollary1, mut w_c1) = all(&|v| v.corollary1_ok);
    let (mut classic, w_cl) = classic_from_verdicts(&verdicts);

    let mut corollary1_refined_distance = None;
    if cfg.refine_corollary1 && corollary1.passed() {
        let (d, w) = refine_corollary1(h1, h2, grid)?;
        corollary1_refined_distance = Some(d);
        if d <= cfg.tol_member {
            corollary1 = Certificate::Fail;
            w_c1 = w.map(Omega::Finite);
        }
    }

    if blocked || verdicts.is_empty() {
        for c in [&mut small_gain, &mut srg_phase, &mut mixed, &mut corollary1, &mut classic] {
            if c.passed() {
                *c = Certificate::Inconclusive;
            }
        }
    }

    let oracle = if cfg.run_oracle {
        match lti::close_loop(h1, h2).and_then(|m| lti::oracle_stable(&m, cfg.tol_stab)) {
            Ok(v) => Some(v),
            Err(e) => {
                warnings.push(format!("closed-loop oracle unavailable: {e}"));
                None
            }
        }
    } else {
        None
    };

    Ok(SweepReport {
        grid: grid.clone(),
        omega_alpha: verdicts.iter().filter(|v| v.srg_phase_ok).map(|v| v.omega).collect(),
        omega_sigma: verdicts.iter().filter(|v| v.small_gain_ok).map(|v| v.omega).collect(),
        verdicts,
        errors,
        certified_small_gain: small_gain,
        certified_srg_phase: srg_phase,
        certified_classic_phase: classic,
        certified_mixed: mixed,
        certified_corollary1: corollary1,
        witnesses: Witnesses {
            small_gain: w_sg,
            srg_phase: w_ph,
            classic_phase: w_cl,
            mixed: w_mx,
            corollary1: w_c1,
        },
        corollary1_refined_distance,
        oracle,
        warnings,
    })
}

/// Inconclusive at the first non-sectorial frequency; otherwise pass only if
/// both angle conditions hold everywhere.
pub fn classic_from_verdicts(verdicts: &[FrequencyVerdict]) -> (Certificate, Option<Omega>) {
    if let Some(v) = verdicts.iter().find(|v| v.classic_phase_ok.is_none()) {
        return (Certificate::Inconclusive, Some(v.omega));
    }
    match verdicts.iter().find(|v| v.classic_phase_ok == Some(false)) {
        Some(v) => (Certificate::Fail, Some(v.omega)),
        None if verdicts.is_empty() => (Certificate::Inconclusive, None),
        None => (Certificate::Pass, None),
    }
}

/// The classic small-phase test over a grid (without the `ω = ∞` sample).
pub fn classic_small_phase(
    h1: &TransferMatrix,
    h2: &TransferMatrix,
    grid: &FrequencyGrid,
    cfg: &SweepConfig,
) -> Result<(Certificate, Option<Omega>)> {
    check_pair(h1, h2)?;
    let mut verdicts = Vec::with_capacity(grid.len());
    for &w in grid.points() {
        let m1 = h1.eval_freq(w)?;
        let m2 = h2.eval_freq(w)?;
        let nr1 = numrange::numrange_boundary(&m1, &cfg.numrange)?;
        let nr2 = numrange::numrange_boundary(&m2, &cfg.numrange)?;
        let ok = if nr1.classification == Classification::Sectorial && nr2.classification == Classification::Sectorial {
            let p1 = numrange::sectorial_phases_with(&m1, &nr1)?;
            let p2 = numrange::sectorial_phases_with(&m2, &nr2)?;
            Some(p1.max() + p2.max() < PI && p1.min() + p2.min() > -PI)
        } else {
            None
        };
        if ok.is_none() {
            return Ok((Certificate::Inconclusive, Some(Omega::Finite(w))));
        }
        verdicts.push(ok);
    }
    Ok(match verdicts.iter().position(|v| *v == Some(false)) {
        Some(i) => (Certificate::Fail, Some(Omega::Finite(grid.points()[i]))),
        None => (Certificate::Pass, None),
    })
}

/// Every evaluated frequency satisfies the gain or the phase condition.
pub fn mixed_certificate(report: &SweepReport) -> bool {
    report.verdicts.iter().all(|v| {
        report.omega_alpha.contains(&v.omega) || report.omega_sigma.contains(&v.omega)
    })
}

fn loop_eigen_distance(h1: &TransferMatrix, h2: &TransferMatrix, w: f64) -> f64 {
    let eval = || -> Result<f64> {
        let l = h1.eval_freq(w)? * h2.eval_freq(w)?;
        srg::eigen_tau_distance(&l)
    };
    eval().unwrap_or(f64::INFINITY)
}

/// Golden-section search in `log ω` around each local minimum of the loop
/// eigenvalue distance on the grid. Returns the smallest distance found and
/// where.
fn refine_corollary1(h1: &TransferMatrix, h2: &TransferMatrix, grid: &FrequencyGrid) -> Result<(f64, Option<f64>)> {
    let pts: Vec<f64> = grid.points().iter().copied().filter(|w| *w > 0.0).collect();
    if pts.is_empty() {
        return Ok((f64::INFINITY, None));
    }
    let d: Vec<f64> = pts.par_iter().map(|&w| loop_eigen_distance(h1, h2, w)).collect();
    let mut best = (f64::INFINITY, None);
    for (i, &di) in d.iter().enumerate() {
        if di < best.0 {
            best = (di, Some(pts[i]));
        }
    }
    let minima: Vec<usize> = (0..pts.len())
        .filter(|&i| (i == 0 || d[i] <= d[i - 1]) && (i + 1 == pts.len() || d[i] <= d[i + 1]))
        .collect();
    let refined: Vec<(f64, f64)> = minima
        .par_iter()
        .map(|&i| {
            let lo = pts[i.saturating_sub(1)].ln();
            let hi = pts[(i + 1).min(pts.len() - 1)].ln();
            let (x, fx) = linalg::golden_section_min(|x| loop_eigen_distance(h1, h2, x.exp()), lo, hi, 60);
            (fx, x.exp())
        })
        .collect();
    for (fx, w) in refined {
        if fx < best.0 {
            best = (fx, Some(w));
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Soundness {
    pub passed: Vec<&'static str>,
    pub oracle_stable: Option<bool>,
    /// A certificate passed while the oracle reports instability.
    pub violation: bool,
}

/// Runs the sweep and checks that no passing certificate contradicts the
/// closed-loop eigenvalues.
pub fn soundness_check(h1: &TransferMatrix, h2: &TransferMatrix, grid: &FrequencyGrid, cfg: &SweepConfig) -> Result<Soundness> {
    let report = sweep(h1, h2, grid, &SweepConfig { run_oracle: true, ..cfg.clone() })?;
    Ok(soundness_of(&report))
}

pub fn soundness_of(report: &SweepReport) -> Soundness {
    let passed: Vec<&'static str> = report
        .certificates()
        .iter()
        .filter(|(_, c)| c.passed())
        .map(|(n, _)| *n)
        .collect();
    let oracle_stable = report.oracle.as_ref().map(|o| o.stable);
    Soundness {
        violation: !passed.is_empty() && oracle_stable == Some(false),
        passed,
        oracle_stable,
    }
}
