//! Numerical range (field of values) `W(A) = {x*Ax : ‖x‖ = 1}`.
//!
//! The boundary is traced with the rotation method: for a direction `θ` the
//! largest eigenpair `(h(θ), v)` of the Hermitian part of `e^{-jθ}A` gives the
//! support value `h(θ) = max_{z ∈ W(A)} Re(e^{-jθ} z)` and the boundary point
//! `v*Av`. Adjacent directions are bisected until the outer corner formed by
//! their supporting lines is within `refine_tol · ‖A‖` of the chord, so the
//! polygon is an inner approximation with a known gap.
//!
//! Membership of the origin is decided from the support function alone:
//! `min_θ h(θ)` is the distance from `0` to the boundary when `0 ∈ W(A)` and
//! minus the distance to `W(A)` otherwise.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::Serialize;

use crate::{linalg, rng, CMatrix, Error, Result};

/// Band around zero, relative to `‖A‖`, inside which `0` counts as a boundary point.
pub const TOL_ZERO: f64 = 1e-9;
/// Angle tolerance separating quasi- from semi-sectorial openings.
pub const TOL_OPENING: f64 = 1e-6;
/// Minimum number of rotation angles.
pub const MIN_ANGLES: usize = 8;

const DEDUP_RTOL: f64 = 1e-10;
const MAX_REFINE_DEPTH: u32 = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Classification {
    Sectorial,
    QuasiSectorial,
    SemiSectorial,
    NonSectorial,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NumrangeConfig {
    pub n_angles: usize,
    /// Outer/inner gap tolerance relative to `‖A‖`; `None` keeps the uniform
    /// angle grid only.
    pub refine_tol: Option<f64>,
    /// Upper bound on boundary points produced by refinement.
    pub max_points: usize,
}

impl Default for NumrangeConfig {
    fn default() -> Self {
        Self {
            n_angles: 360,
            refine_tol: Some(5e-9),
            max_points: 1 << 17,
        }
    }
}

impl NumrangeConfig {
    /// Uniform grid only; enough for classification and phases.
    pub fn coarse() -> Self {
        Self {
            refine_tol: None,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NumericalRange {
    /// Convex boundary polygon, counter-clockwise about its centroid.
    pub boundary: Vec<Complex64>,
    pub contains_zero: bool,
    pub classification: Classification,
    pub support_max: Option<f64>,
    pub support_min: Option<f64>,
    /// `min_θ h(θ)`: positive when `0` is interior.
    pub zero_depth: f64,
    /// Opening of the smallest sector about the origin containing `W(A)`.
    pub opening: f64,
    /// Spectral norm of `A`.
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SectorialPhases {
    /// Descending.
    pub phases: Vec<f64>,
    /// Mid-angle of the supporting sector used for the rotation.
    pub rotation: f64,
}

impl SectorialPhases {
    pub fn max(&self) -> f64 {
        self.phases[0]
    }

    pub fn min(&self) -> f64 {
        self.phases[self.phases.len() - 1]
    }
}

#[derive(Debug, Clone, Copy)]
struct SupportSample {
    theta: f64,
    h: f64,
    point: Complex64,
}

fn support(a: &CMatrix, theta: f64) -> Result<SupportSample> {
    let rotated = a * Complex64::from_polar(1.0, -theta);
    let (h, v) = linalg::largest_eigenpair(&linalg::hermitian_part(&rotated))?;
    Ok(SupportSample {
        theta,
        h,
        point: linalg::quadratic_form(a, &v),
    })
}

fn support_value(a: &CMatrix, theta: f64) -> Result<f64> {
    let rotated = a * Complex64::from_polar(1.0, -theta);
    let (values, _) = linalg::hermitian_eigh(&linalg::hermitian_part(&rotated))?;
    Ok(values[values.len() - 1])
}

/// Distance from the corner of the two supporting lines to the chord between
/// their boundary points.
fn outer_gap(s0: &SupportSample, s1: &SupportSample) -> f64 {
    let (c0, n0) = (s0.theta.cos(), s0.theta.sin());
    let (c1, n1) = (s1.theta.cos(), s1.theta.sin());
    let det = c0 * n1 - n0 * c1;
    if det.abs() < 1e-14 {
        return 0.0;
    }
    let x = (s0.h * n1 - n0 * s1.h) / det;
    let y = (c0 * s1.h - s0.h * c1) / det;
    segment_distance(Complex64::new(x, y), s0.point, s1.point)
}

fn segment_distance(z: Complex64, p: Complex64, q: Complex64) -> f64 {
    let d = q - p;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return (z - p).norm();
    }
    let t = ((z - p) * d.conj()).re / len2;
    (z - (p + d * t.clamp(0.0, 1.0))).norm()
}

fn cross(u: Complex64, v: Complex64) -> f64 {
    u.re * v.im - u.im * v.re
}

struct Refiner<'a> {
    a: &'a CMatrix,
    tol: f64,
    max_points: usize,
    out: Vec<Complex64>,
}

impl Refiner<'_> {
    fn refine(&mut self, s0: SupportSample, s1: SupportSample, depth: u32) -> Result<()> {
        if depth >= MAX_REFINE_DEPTH || self.out.len() >= self.max_points || outer_gap(&s0, &s1) <= self.tol {
            return Ok(());
        }
        let mid = support(self.a, 0.5 * (s0.theta + s1.theta))?;
        self.refine(s0, mid, depth + 1)?;
        self.out.push(mid.point);
        self.refine(mid, s1, depth + 1)
    }
}

/// Minimum of the support function: uniform scan, then golden-section polish
/// around the best sample.
fn zero_depth(a: &CMatrix, samples: &[SupportSample]) -> Result<f64> {
    let n = samples.len();
    let (k, best) = samples
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.h.total_cmp(&y.1.h))
        .map(|(k, s)| (k, s.h))
        .expect("at least one sample");
    let step = TAU / n as f64;
    let theta = samples[k].theta;
    let failed = std::cell::Cell::new(None);
    let (_, polished) = linalg::golden_section_min(
        |t| match support_value(a, t) {
            Ok(h) => h,
            Err(e) => {
                failed.set(Some(e));
                f64::INFINITY
            }
        },
        theta - step,
        theta + step,
        80,
    );
    if let Some(e) = failed.take() {
        return Err(e);
    }
    Ok(best.min(polished))
}

/// `(opening, start)` of the smallest arc of directions covering the arguments
/// of the boundary points farther than `radius` from the origin.
fn covering_arc(points: &[Complex64], radius: f64) -> Option<(f64, f64)> {
    let mut args: Vec<f64> = points.iter().filter(|z| z.norm() > radius).map(|z| z.arg()).collect();
    if args.is_empty() {
        return None;
    }
    args.sort_by(f64::total_cmp);
    let m = args.len();
    let (gap_idx, gap) = (0..m)
        .map(|i| {
            let next = if i + 1 < m { args[i + 1] } else { args[0] + TAU };
            (i, next - args[i])
        })
        .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
    let start = args[(gap_idx + 1) % m];
    Some(((TAU - gap).max(0.0), start))
}

fn wrap_to_pi(x: f64) -> f64 {
    let mut y = x.rem_euclid(TAU);
    if y > PI {
        y -= TAU;
    }
    y
}

/// Bisection for the root of `h` near `guess`, where `h` is positive for
/// `θ < root` when `rising` is false and negative for `θ < root` when true.
fn support_root(a: &CMatrix, guess: f64, rising: bool) -> Result<Option<f64>> {
    let sign = if rising { 1.0 } else { -1.0 };
    for delta in [1e-4, 1e-3, 1e-2, 1e-1, 0.3] {
        let (mut lo, mut hi) = (guess - delta, guess + delta);
        let (flo, fhi) = (sign * support_value(a, lo)?, sign * support_value(a, hi)?);
        if flo < 0.0 && fhi > 0.0 {
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if sign * support_value(a, mid)? < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Ok(Some(0.5 * (lo + hi)));
        }
    }
    Ok(None)
}

fn single_entry(a: Complex64) -> NumericalRange {
    let r = a.norm();
    let sectorial = a != linalg::ZERO;
    NumericalRange {
        boundary: vec![a],
        contains_zero: !sectorial,
        classification: if sectorial {
            Classification::Sectorial
        } else {
            Classification::QuasiSectorial
        },
        support_max: Some(if sectorial { a.arg() } else { 0.0 }),
        support_min: Some(if sectorial { a.arg() } else { 0.0 }),
        zero_depth: -r,
        opening: 0.0,
        scale: r,
    }
}

/// Boundary, origin membership, sectoriality class and supporting angles of `W(A)`.
pub fn numrange_boundary(a: &CMatrix, cfg: &NumrangeConfig) -> Result<NumericalRange> {
    let n = a.nrows();
    if n == 0 || a.ncols() != n {
        return Err(Error::Dimension(format!("expected a square matrix, got {}x{}", n, a.ncols())));
    }
    if !linalg::is_finite_matrix(a) {
        return Err(Error::NonFinite("matrix".into()));
    }
    if cfg.n_angles < MIN_ANGLES {
        return Err(Error::Dimension(format!("n_angles must be at least {MIN_ANGLES}")));
    }
    if n == 1 {
        return Ok(single_entry(a[(0, 0)]));
    }
    let scale = linalg::sigma_max(a);
    let step = TAU / cfg.n_angles as f64;
    let samples = (0..cfg.n_angles)
        .map(|k| support(a, k as f64 * step))
        .collect::<Result<Vec<_>>>()?;

    let mut refiner = Refiner {
        a,
        tol: cfg.refine_tol.map_or(f64::INFINITY, |t| t * scale),
        max_points: cfg.max_points,
        out: Vec::with_capacity(cfg.n_angles),
    };
    for k in 0..samples.len() {
        let s0 = samples[k];
        refiner.out.push(s0.point);
        let mut s1 = samples[(k + 1) % samples.len()];
        s1.theta = s0.theta + step;
        refiner.refine(s0, s1, 0)?;
    }
    let boundary = order_about_centroid(dedup(refiner.out, DEDUP_RTOL * scale));

    let depth = zero_depth(a, &samples)?;
    let band = TOL_ZERO * scale;
    let (opening, start) = covering_arc(&boundary, 1e-7 * scale).unwrap_or((0.0, 0.0));
    let classification = classify_parts(depth, band, opening);

    let (support_max, support_min) = match classification {
        Classification::NonSectorial => (None, None),
        _ => {
            let lo = start;
            let hi = start + opening;
            let shift = wrap_to_pi(0.5 * (lo + hi)) - 0.5 * (lo + hi);
            let (mut lo, mut hi) = (lo + shift, hi + shift);
            if classification == Classification::Sectorial {
                if let Some(t) = support_root(a, hi + PI / 2.0, false)? {
                    hi = t - PI / 2.0;
                }
                if let Some(t) = support_root(a, lo - PI / 2.0, true)? {
                    lo = t + PI / 2.0;
                }
            }
            (Some(hi), Some(lo))
        }
    };

    Ok(NumericalRange {
        boundary,
        contains_zero: depth >= -band,
        classification,
        support_max,
        support_min,
        zero_depth: depth,
        opening,
        scale,
    })
}

fn classify_parts(depth: f64, band: f64, opening: f64) -> Classification {
    if depth > band {
        Classification::NonSectorial
    } else if depth >= -band {
        if opening < PI - TOL_OPENING {
            Classification::QuasiSectorial
        } else {
            Classification::SemiSectorial
        }
    } else {
        Classification::Sectorial
    }
}

fn dedup(points: Vec<Complex64>, tol: f64) -> Vec<Complex64> {
    let mut out: Vec<Complex64> = Vec::with_capacity(points.len());
    for p in points {
        if out.last().is_none_or(|q| (p - q).norm() > tol) {
            out.push(p);
        }
    }
    while out.len() > 1 && (out[0] - out[out.len() - 1]).norm() <= tol {
        out.pop();
    }
    out
}

fn order_about_centroid(mut points: Vec<Complex64>) -> Vec<Complex64> {
    let m = points.len() as f64;
    let centroid = points.iter().sum::<Complex64>() / m;
    points.sort_by(|p, q| (p - centroid).arg().total_cmp(&(q - centroid).arg()));
    points
}

/// Re-derives the class from the stored depth and opening.
pub fn classify(range: &NumericalRange) -> Classification {
    classify_parts(range.zero_depth, TOL_ZERO * range.scale, range.opening)
}

/// `(support_max, support_min)`; undefined for non-sectorial matrices.
pub fn supporting_angles(range: &NumericalRange) -> Result<(f64, f64)> {
    match (range.classification, range.support_max, range.support_min) {
        (Classification::NonSectorial, _, _) => Err(Error::NotDefined),
        (_, Some(hi), Some(lo)) => Ok((hi, lo)),
        _ => Err(Error::NotDefined),
    }
}

/// Phases of a sectorial matrix from its congruence (sectorial) decomposition.
///
/// With `φ` the mid-angle of the supporting sector, `B = e^{-jφ}A` has a
/// positive definite Hermitian part `H`; the phases are
/// `φ + arctan(eig(H^{-1/2} S H^{-1/2}))` with `S` the skew part of `B`.
pub fn sectorial_phases(a: &CMatrix) -> Result<SectorialPhases> {
    let range = numrange_boundary(a, &NumrangeConfig::coarse())?;
    sectorial_phases_with(a, &range)
}

/// As [`sectorial_phases`], reusing an already computed numerical range.
pub fn sectorial_phases_with(a: &CMatrix, range: &NumericalRange) -> Result<SectorialPhases> {
    if range.classification != Classification::Sectorial {
        return Err(Error::NotSectorial);
    }
    let (hi, lo) = supporting_angles(range)?;
    let rotation = 0.5 * (hi + lo);
    let n = a.nrows();
    if n == 1 {
        return Ok(SectorialPhases {
            phases: vec![a[(0, 0)].arg()],
            rotation,
        });
    }
    let b = a * Complex64::from_polar(1.0, -rotation);
    let h = linalg::hermitian_part(&b);
    let s = linalg::skew_hermitian_part(&b);
    let (values, vectors) = linalg::hermitian_eigh(&h)?;
    if values[0] <= 1e-12 * range.scale {
        return Err(Error::NumericalBreakdown(format!(
            "Hermitian part of the rotated matrix is not positive definite (min eigenvalue {:e})",
            values[0]
        )));
    }
    let inv_sqrt = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        n,
        values.iter().map(|v| Complex64::new(1.0 / v.sqrt(), 0.0)),
    ));
    let w = &vectors * inv_sqrt * vectors.adjoint();
    let (mu, _) = linalg::hermitian_eigh(&(&w * s * &w))?;
    let mut phases: Vec<f64> = mu.iter().map(|m| rotation + m.atan()).collect();
    phases.sort_by(|x, y| y.total_cmp(x));
    Ok(SectorialPhases { phases, rotation })
}

/// Sampling oracle for `0 ∈ W(A)`: `0` lies in the convex hull of sampled
/// `x*Ax` iff no half-plane through the origin contains all samples, i.e. the
/// widest angular gap between sample arguments is at most `π`.
pub fn contains_zero_sampled(a: &CMatrix, n_samples: usize, seed: u64) -> bool {
    let n = a.nrows();
    let mut rng = rng::stream(seed);
    let mut args = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let x = rng::unit_vector(&mut rng, n);
        let z = linalg::quadratic_form(a, &x);
        if z == linalg::ZERO {
            return true;
        }
        args.push(z.arg());
    }
    args.sort_by(f64::total_cmp);
    let m = args.len();
    let widest = (0..m)
        .map(|i| if i + 1 < m { args[i + 1] - args[i] } else { args[0] + TAU - args[i] })
        .fold(0.0, f64::max);
    widest <= PI
}

impl NumericalRange {
    /// Distance from `z` to the polygon hull of the boundary (0 when inside).
    pub fn hull_distance(&self, z: Complex64) -> f64 {
        let b = &self.boundary;
        match b.len() {
            0 => f64::INFINITY,
            1 => (z - b[0]).norm(),
            m => {
                let inside = (0..m).all(|i| cross(b[(i + 1) % m] - b[i], z - b[i]) >= 0.0);
                if inside && m > 2 {
                    return 0.0;
                }
                (0..m)
                    .map(|i| segment_distance(z, b[i], b[(i + 1) % m]))
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }

    /// Cross-product convexity test on consecutive edges.
    pub fn is_convex(&self, tol: f64) -> bool {
        let b = &self.boundary;
        let m = b.len();
        if m < 3 {
            return true;
        }
        let scale2 = self.scale.max(f64::MIN_POSITIVE).powi(2);
        (0..m).all(|i| {
            let p0 = b[i];
            let p1 = b[(i + 1) % m];
            let p2 = b[(i + 2) % m];
            cross(p1 - p0, p2 - p1) >= -tol * scale2
        })
    }
}
