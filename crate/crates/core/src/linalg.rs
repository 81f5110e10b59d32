//! Small dense kernels shared by the analysis modules.

use nalgebra::{Schur, SymmetricEigen, SVD};
use num_complex::Complex64;

use crate::{CMatrix, CVector, Error, RMatrix, Result};

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// `(A + A*) / 2`.
pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()).scale(0.5)
}

/// `(A - A*) / (2j)`, Hermitian.
pub fn skew_hermitian_part(a: &CMatrix) -> CMatrix {
    (a - a.adjoint()) * Complex64::new(0.0, -0.5)
}

/// Forces exact Hermitian symmetry on a matrix that is Hermitian up to rounding.
pub fn symmetrize(h: &CMatrix) -> CMatrix {
    hermitian_part(h)
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues in ascending order.
pub fn hermitian_eigh(h: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    if h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("Hermitian eigenproblem".into()));
    }
    let eig = SymmetricEigen::try_new(symmetrize(h), f64::EPSILON, 10_000)
        .ok_or_else(|| Error::EigFailure("Hermitian eigensolver did not converge".into()))?;
    let n = h.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// Largest eigenvalue of a Hermitian matrix and a unit eigenvector for it.
pub fn largest_eigenpair(h: &CMatrix) -> Result<(f64, CVector)> {
    let (values, vectors) = hermitian_eigh(h)?;
    let n = values.len();
    Ok((values[n - 1], vectors.column(n - 1).into_owned()))
}

/// `x* A x`.
pub fn quadratic_form(a: &CMatrix, x: &CVector) -> Complex64 {
    x.dotc(&(a * x))
}

pub fn norm(x: &CVector) -> f64 {
    x.norm()
}

/// Largest singular value.
pub fn sigma_max(a: &CMatrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.clone().singular_values().iter().copied().fold(0.0, f64::max)
}

/// Largest singular value together with a unit right singular vector.
pub fn top_right_singular_vector(a: &CMatrix) -> (f64, CVector) {
    let n = a.ncols();
    let svd = SVD::new(a.clone(), false, true);
    let (k, s) = svd
        .singular_values
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, s)| if s > best.1 { (i, s) } else { best });
    let v_t = svd.v_t.expect("v_t requested");
    let v = CVector::from_fn(n, |i, _| v_t[(k, i)].conj());
    (s, v)
}

/// Eigenvalues of a complex square matrix via the complex Schur form.
pub fn eigenvalues(a: &CMatrix) -> Result<Vec<Complex64>> {
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("eigenproblem".into()));
    }
    // Machine-epsilon deflation can stall on highly defective matrices (long
    // Jordan chains from repeated poles); retry with looser thresholds.
    for eps in [f64::EPSILON, 1e-15, 1e-14, 1e-12] {
        if let Some(schur) = Schur::try_new(a.clone(), eps, 10_000) {
            let (_, t) = schur.unpack();
            return Ok((0..t.nrows()).map(|i| t[(i, i)]).collect());
        }
    }
    Err(Error::EigFailure("complex Schur iteration did not converge".into()))
}

/// Unit eigenvector for an (approximate) eigenvalue `lambda`, taken as the right
/// singular vector of `A - λI` with the smallest singular value.
pub fn eigenvector(a: &CMatrix, lambda: Complex64) -> CVector {
    let n = a.nrows();
    let shifted = a - CMatrix::identity(n, n) * lambda;
    let svd = SVD::new(shifted, false, true);
    let (k, _) = svd
        .singular_values
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |best, (i, s)| if s < best.1 { (i, s) } else { best });
    let v_t = svd.v_t.expect("v_t requested");
    CVector::from_fn(n, |i, _| v_t[(k, i)].conj())
}

/// Eigenvalues of a real square matrix.
pub fn real_eigenvalues(a: &RMatrix) -> Result<Vec<Complex64>> {
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("state matrix".into()));
    }
    // complex_eigenvalues panics on non-convergence; go through the complex Schur
    // path so failures surface as errors.
    let c = a.map(|v| Complex64::new(v, 0.0));
    eigenvalues(&c)
}

/// Roots of a real polynomial with coefficients in descending powers.
pub fn poly_roots(coeffs: &[f64]) -> Result<Vec<Complex64>> {
    let first = coeffs.iter().position(|&c| c != 0.0);
    let Some(first) = first else {
        return Ok(Vec::new());
    };
    let mut c = &coeffs[first..];
    let mut roots = Vec::new();
    while c.len() > 1 && c[c.len() - 1] == 0.0 {
        roots.push(ZERO);
        c = &c[..c.len() - 1];
    }
    let degree = c.len() - 1;
    if degree == 0 {
        return Ok(roots);
    }
    let lead = c[0];
    let companion = RMatrix::from_fn(degree, degree, |i, j| {
        if i == 0 {
            -c[j + 1] / lead
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    roots.extend(real_eigenvalues(&companion)?);
    Ok(roots)
}

/// Minimum over `[lo, hi]` of a function assumed unimodal there.
pub fn golden_section_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, iters: usize) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..iters {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

pub fn is_finite_matrix(a: &CMatrix) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}
