//! Scaled relative graphs of square complex matrices.
//!
//! For a unit input `u` and output `y = Au` the SRG contains
//! `‖y‖ · exp(±j ∠(u, y))` with `∠(u, y) = arccos(Re⟨y, u⟩ / ‖y‖)`, and `0`
//! when `y = 0`. Points are stored once with `α ∈ [0, π]` and stand for both
//! conjugates. Every point keeps the input that generated it.

use std::cmp::Ordering;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::rng::{self, Purpose};
use crate::{linalg, CMatrix, CVector, Error, Result};

/// Default τ-membership band for the point `-1`.
pub const TOL_MEMBER: f64 = 1e-6;
/// Outputs with `‖Au‖ ≤ ZERO_GAIN_RTOL · ‖A‖` are treated as zero.
pub const ZERO_GAIN_RTOL: f64 = 1e-14;
/// Eigenvalues with `|Im λ| ≤ REAL_EIG_RTOL · |λ|` count as real.
pub const REAL_EIG_RTOL: f64 = 1e-12;
/// Smallest sample count accepted by [`srg_sample`].
pub const MIN_SAMPLES: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SrgPoint {
    pub r: f64,
    pub alpha: f64,
    #[serde(skip)]
    pub witness: CVector,
}

impl SrgPoint {
    /// Gain and angle for a unit input `u`; `norm` is `‖A‖` for the zero test.
    pub fn from_witness(a: &CMatrix, u: CVector, norm: f64) -> Self {
        let y = a * &u;
        let (r, alpha) = gain_angle(&u, &y, norm);
        Self { r, alpha, witness: u }
    }

    /// Upper-half-plane representative `r e^{jα}`.
    pub fn z(&self) -> Complex64 {
        Complex64::from_polar(self.r, self.alpha)
    }
}

/// `(‖y‖, ∠(u, y))`. Splitting `y = κu + w` with `w ⟂ u` keeps full
/// precision for nearly parallel vectors and gives exact zeros when `y` is a
/// real multiple of `u`.
fn gain_angle(u: &CVector, y: &CVector, norm: f64) -> (f64, f64) {
    let r = y.norm();
    if r <= ZERO_GAIN_RTOL * norm || r == 0.0 {
        return (r, 0.0);
    }
    let uu = u.norm_squared();
    let kappa = u.dotc(y) / uu;
    let w = y - u * kappa;
    let un = uu.sqrt();
    let perp = (kappa.im * un).hypot(w.norm());
    (r, perp.atan2(kappa.re * un))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SrgSample {
    pub points: Vec<SrgPoint>,
    /// `σ_max(A)`.
    pub matrix_norm: f64,
    pub seed: u64,
    pub n_samples: usize,
    /// Whether singular-vector and eigenvector witnesses were appended.
    pub refined: bool,
}

/// Random SRG points from `n_samples` uniform unit inputs.
pub fn srg_sample(a: &CMatrix, n_samples: usize, seed: u64) -> Result<SrgSample> {
    check_square(a)?;
    if n_samples < MIN_SAMPLES {
        return Err(Error::InvalidArgument(format!("n_samples must be at least {MIN_SAMPLES}")));
    }
    let n = a.nrows();
    let norm = linalg::sigma_max(a);
    let mut rng = rng::stream(seed);
    let points = (0..n_samples)
        .map(|_| SrgPoint::from_witness(a, rng::unit_vector(&mut rng, n), norm))
        .collect();
    Ok(SrgSample {
        points,
        matrix_norm: norm,
        seed,
        n_samples,
        refined: false,
    })
}

/// Appends the top right singular vector and every eigenvector as witnesses.
///
/// Eigenvectors matter for the τ-ray test: `(-1, 0) ∈ τ SRG(A)` for some
/// `τ ∈ (0, 1]` exactly when `A` has a real eigenvalue `λ ≤ -1`, and random
/// inputs never land on an eigenvector.
pub fn refine_sample(a: &CMatrix, sample: &mut SrgSample) -> Result<()> {
    let norm = sample.matrix_norm;
    let (_, v) = linalg::top_right_singular_vector(a);
    sample.points.push(SrgPoint::from_witness(a, v, norm));
    for lambda in linalg::eigenvalues(a)? {
        let v = linalg::eigenvector(a, lambda);
        sample.points.push(SrgPoint::from_witness(a, v, norm));
    }
    sample.refined = true;
    Ok(())
}

impl SrgSample {
    pub fn max_gain(&self) -> f64 {
        self.points.iter().map(|p| p.r).fold(0.0, f64::max)
    }

    pub fn max_angle(&self) -> f64 {
        self.points.iter().map(|p| p.alpha).fold(0.0, f64::max)
    }

    /// `(re, im, r, alpha)` rows with both conjugates of every non-real point.
    pub fn mirrored(&self) -> Vec<[f64; 4]> {
        let mut rows = Vec::with_capacity(2 * self.points.len());
        for p in &self.points {
            let z = p.z();
            rows.push([z.re, z.im, p.r, p.alpha]);
            if z.im != 0.0 {
                rows.push([z.re, -z.im, p.r, -p.alpha]);
            }
        }
        rows
    }
}

/// Largest singular value, `max_{‖u‖=1} ‖Au‖`.
pub fn sigma_max(a: &CMatrix) -> f64 {
    linalg::sigma_max(a)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaMaxConfig {
    pub starts: usize,
    pub max_iters: usize,
    /// Random inputs scored before the best ones are used as starts.
    pub seed_samples: usize,
    /// Stop once an iteration improves the angle by less than this.
    pub tol: f64,
    pub seed: u64,
}

impl Default for AlphaMaxConfig {
    fn default() -> Self {
        Self {
            starts: 64,
            max_iters: 500,
            seed_samples: 10_000,
            tol: 1e-10,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaMax {
    pub angle: f64,
    #[serde(skip)]
    pub witness: CVector,
    /// Best angle among the random seed inputs alone.
    pub sampled: f64,
}

/// Maximum singular angle `α̂_max(A) = max_{‖u‖=1, Au≠0} ∠(u, Au)`.
///
/// Multi-start Riemannian gradient descent on `cos ∠(u, Au)` over the unit
/// sphere, started from the best random inputs and from the eigenvectors.
/// The result is attained by the returned witness, so it is a certified lower
/// bound, never below the best random sample.
pub fn alpha_max(a: &CMatrix, cfg: &AlphaMaxConfig) -> Result<AlphaMax> {
    check_square(a)?;
    let n = a.nrows();
    let norm = linalg::sigma_max(a);
    if norm == 0.0 {
        let mut e1 = CVector::zeros(n);
        e1[0] = linalg::ONE;
        return Ok(AlphaMax {
            angle: 0.0,
            witness: e1,
            sampled: 0.0,
        });
    }
    let mut rng = rng::stream(cfg.seed);
    let mut seeds: Vec<SrgPoint> = (0..cfg.seed_samples.max(1))
        .map(|_| SrgPoint::from_witness(a, rng::unit_vector(&mut rng, n), norm))
        .collect();
    seeds.sort_by(|p, q| q.alpha.total_cmp(&p.alpha));
    let sampled = seeds[0].alpha;
    seeds.truncate(cfg.starts.max(1));
    let eigs = linalg::eigenvalues(a)?;
    for &lambda in &eigs {
        seeds.push(SrgPoint::from_witness(a, linalg::eigenvector(a, lambda), norm));
    }

    let problem = AngleProblem::new(a, norm);
    let results: Vec<(f64, CVector)> = seeds
        .into_par_iter()
        .map(|s| problem.ascend(s.witness, cfg.max_iters, cfg.tol))
        .collect();
    let (mut angle, mut witness) = results
        .into_iter()
        .max_by(compare_candidates)
        .expect("at least one start");
    // a negative real eigenvalue attains π exactly; its computed eigenvector
    // only gets within rounding of it
    if angle < PI {
        if let Some(lambda) = eigs.iter().find(|l| l.re < 0.0 && l.im.abs() <= REAL_EIG_RTOL * l.norm()) {
            angle = PI;
            witness = linalg::eigenvector(a, *lambda);
        }
    }
    Ok(AlphaMax {
        angle,
        witness,
        sampled,
    })
}

/// Larger angle wins; ties go to the lexicographically smaller witness.
fn compare_candidates(x: &(f64, CVector), y: &(f64, CVector)) -> Ordering {
    x.0.total_cmp(&y.0).then_with(|| {
        for (p, q) in x.1.iter().zip(y.1.iter()) {
            let o = q.re.total_cmp(&p.re).then(q.im.total_cmp(&p.im));
            if o != Ordering::Equal {
                return o;
            }
        }
        Ordering::Equal
    })
}

struct AngleProblem<'a> {
    a: &'a CMatrix,
    herm: CMatrix,
    adj: CMatrix,
    norm: f64,
}

impl<'a> AngleProblem<'a> {
    fn new(a: &'a CMatrix, norm: f64) -> Self {
        Self {
            a,
            herm: linalg::hermitian_part(a),
            adj: a.adjoint(),
            norm,
        }
    }

    fn angle(&self, u: &CVector) -> f64 {
        gain_angle(u, &(self.a * u), self.norm).1
    }

    /// `cos ∠(u, Au)` and its Riemannian gradient on the sphere.
    fn cos_and_grad(&self, u: &CVector) -> Option<(f64, CVector)> {
        let y = self.a * u;
        let q = y.norm_squared();
        if q.sqrt() <= ZERO_GAIN_RTOL * self.norm {
            return None;
        }
        let p = u.dotc(&y).re;
        let sq = q.sqrt();
        let g = (&self.herm * u) * Complex64::new(2.0 / sq, 0.0) - (&self.adj * &y) * Complex64::new(p / (q * sq), 0.0);
        let radial = u.dotc(&g).re;
        let g = g - u * Complex64::new(radial, 0.0);
        Some((p / sq, g))
    }

    fn ascend(&self, start: CVector, max_iters: usize, tol: f64) -> (f64, CVector) {
        let mut u = start;
        let mut best = self.angle(&u);
        let mut step = 1.0;
        for _ in 0..max_iters {
            let Some((c, g)) = self.cos_and_grad(&u) else {
                break;
            };
            let g2 = g.norm_squared();
            if g2 < 1e-30 {
                break;
            }
            let mut accepted = None;
            while step > 1e-16 {
                let trial = &u - &g * Complex64::new(step, 0.0);
                let trial = trial.unscale(trial.norm());
                if let Some((ct, _)) = self.cos_and_grad(&trial) {
                    if ct <= c - 1e-4 * step * g2 {
                        accepted = Some(trial);
                        break;
                    }
                }
                step *= 0.5;
            }
            let Some(next) = accepted else {
                break;
            };
            let angle = self.angle(&next);
            let gain = angle - best;
            if angle >= best {
                u = next;
                best = angle;
            } else {
                break;
            }
            if gain < tol {
                break;
            }
            step = (step * 2.0).min(1e6);
        }
        (best, u)
    }
}

/// Dense random-sampling estimate of `α̂_max` for small matrices (`n ≤ 4`).
pub fn alpha_max_oracle(a: &CMatrix, n_dense: usize, seed: u64) -> Result<f64> {
    check_square(a)?;
    let n = a.nrows();
    if n > 4 {
        return Err(Error::DimensionTooLarge(n));
    }
    let norm = linalg::sigma_max(a);
    const CHUNK: usize = 8192;
    let chunks = n_dense.div_ceil(CHUNK);
    let best = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng::stream(rng::split_seed(seed, k as u64, Purpose::Generic));
            let count = CHUNK.min(n_dense - k * CHUNK);
            (0..count)
                .map(|_| {
                    let u = rng::unit_vector(&mut rng, n);
                    let y = a * &u;
                    gain_angle(&u, &y, norm).1
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    Ok(best)
}

/// Origin-centred arc `{r e^{jβ} : |β| ≤ alpha_max}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Arc {
    pub r: f64,
    pub alpha_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArcSet {
    pub arcs: Vec<Arc>,
}

/// Right-arc over-approximation: each point grows into the arc joining it to
/// its conjugate through the positive real side.
pub fn right_arc_closure(sample: &SrgSample) -> ArcSet {
    ArcSet {
        arcs: sample
            .points
            .iter()
            .map(|p| Arc {
                r: p.r,
                alpha_max: p.alpha.abs(),
            })
            .collect(),
    }
}

impl ArcSet {
    pub fn max_gain(&self) -> f64 {
        self.arcs.iter().map(|a| a.r).fold(0.0, f64::max)
    }

    pub fn max_angle(&self) -> f64 {
        self.arcs.iter().map(|a| a.alpha_max).fold(0.0, f64::max)
    }

    /// Whether `r e^{jα}` lies on one of the arcs.
    pub fn covers(&self, r: f64, alpha: f64) -> bool {
        self.arcs.iter().any(|a| a.r == r && alpha.abs() <= a.alpha_max)
    }

    /// τ-ray distance of the closure; an arc is no closer to `-1` than its
    /// endpoint, so this equals the distance of the generating points.
    pub fn tau_ray_distance(&self, tol_member: f64) -> TauDistance {
        tau_distance_of(self.arcs.iter().map(|a| (a.r, a.alpha_max)), tol_member)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TauDistance {
    /// `inf |τz + 1|` over the points and `τ ∈ (0, 1]`.
    pub distance: f64,
    /// `distance ≤ tol_member`.
    pub membership: bool,
    /// Minimizing `τ`; `0` means the infimum is approached as `τ → 0⁺`.
    pub tau: f64,
    /// Index of the closest point.
    pub index: Option<usize>,
}

/// Distance from `-1` to the segment `{τ r e^{jα} : τ ∈ [0, 1]}`.
pub fn segment_distance_to_minus_one(r: f64, alpha: f64) -> (f64, f64) {
    if r == 0.0 {
        return (1.0, 0.0);
    }
    let z = Complex64::from_polar(r, alpha);
    let tau = (-z.re / (r * r)).clamp(0.0, 1.0);
    ((z * tau + 1.0).norm(), tau)
}

fn tau_distance_of(points: impl Iterator<Item = (f64, f64)>, tol_member: f64) -> TauDistance {
    let mut best = TauDistance {
        distance: 1.0,
        membership: false,
        tau: 0.0,
        index: None,
    };
    for (i, (r, alpha)) in points.enumerate() {
        let (d, tau) = segment_distance_to_minus_one(r, alpha);
        if d < best.distance {
            best = TauDistance {
                distance: d,
                membership: false,
                tau,
                index: Some(i),
            };
        }
    }
    best.membership = best.distance <= tol_member;
    best
}

/// Whether `(-1, 0)` lies in `τ SRG` for some `τ ∈ (0, 1]`, judged on the
/// sampled points, together with the raw distance.
pub fn tau_ray_distance(sample: &SrgSample, tol_member: f64) -> TauDistance {
    tau_distance_of(sample.points.iter().map(|p| (p.r, p.alpha)), tol_member)
}

/// Distance computed from the eigenvalues alone (each is an SRG point).
/// Continuous in the matrix entries, so usable for searches between grid
/// frequencies.
pub fn eigen_tau_distance(a: &CMatrix) -> Result<f64> {
    let eig = linalg::eigenvalues(a)?;
    Ok(eig
        .iter()
        .map(|l| segment_distance_to_minus_one(l.norm(), l.arg().abs()).0)
        .fold(1.0, f64::min))
}

fn check_square(a: &CMatrix) -> Result<()> {
    if a.nrows() == 0 || a.nrows() != a.ncols() {
        return Err(Error::Dimension(format!("expected a square matrix, got {}x{}", a.nrows(), a.ncols())));
    }
    if !linalg::is_finite_matrix(a) {
        return Err(Error::NonFinite("matrix".into()));
    }
    Ok(())
}

/// `|arg a|` folded into `[0, π]`.
pub fn scalar_angle(a: Complex64) -> f64 {
    if a == linalg::ZERO {
        0.0
    } else {
        a.arg().abs().min(PI)
    }
}
