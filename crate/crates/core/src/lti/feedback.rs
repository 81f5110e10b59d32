use nalgebra::LU;
use serde::Serialize;

use super::TransferMatrix;
use crate::{linalg, Error, RMatrix, Result};

/// State-space model of the negative-feedback loop `e = u − H2 y`, `y = H1 e`.
///
/// States are ordered `[x1; x2]`; input `u`, output `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoopModel {
    pub a: RMatrix,
    pub b: RMatrix,
    pub c: RMatrix,
    pub d: RMatrix,
    pub n_states1: usize,
    pub n_states2: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleVerdict {
    pub stable: bool,
    /// Largest real part of the closed-loop eigenvalues; absent when the loop
    /// has no states.
    pub spectral_abscissa: Option<f64>,
    pub n_states: usize,
}

const ILL_POSED_RTOL: f64 = 1e-12;

/// Interconnects `H1` (forward) and `H2` (feedback) as in a unity negative loop.
pub fn close_loop(h1: &TransferMatrix, h2: &TransferMatrix) -> Result<ClosedLoopModel> {
    if h1.n() != h2.n() {
        return Err(Error::Dimension(format!(
            "H1 is {0}x{0} but H2 is {1}x{1}",
            h1.n(),
            h2.n()
        )));
    }
    let s1 = h1.to_state_space()?;
    let s2 = h2.to_state_space()?;
    let n = h1.n();
    let (nx1, nx2) = (s1.n_states(), s2.n_states());

    let loop_matrix = RMatrix::identity(n, n) + &s1.d * &s2.d;
    let scale = loop_matrix.abs().max().max(1.0);
    let lu = LU::new(loop_matrix);
    let u = lu.u();
    let min_pivot = (0..n).map(|i| u[(i, i)].abs()).fold(f64::INFINITY, f64::min);
    if min_pivot <= ILL_POSED_RTOL * scale {
        return Err(Error::IllPosed);
    }
    let m = lu.try_inverse().ok_or(Error::IllPosed)?;

    // y = M (C1 x1 − D1 C2 x2 + D1 u)
    let y_x1 = &m * &s1.c;
    let y_x2 = -(&m * &s1.d * &s2.c);
    let y_u = &m * &s1.d;
    // e = u − C2 x2 − D2 y
    let e_x1 = -(&s2.d * &y_x1);
    let e_x2 = -&s2.c - &s2.d * &y_x2;
    let e_u = RMatrix::identity(n, n) - &s2.d * &y_u;

    let nx = nx1 + nx2;
    let mut a = RMatrix::zeros(nx, nx);
    let mut b = RMatrix::zeros(nx, n);
    let mut c = RMatrix::zeros(n, nx);
    a.view_mut((0, 0), (nx1, nx1)).copy_from(&(&s1.a + &s1.b * &e_x1));
    a.view_mut((0, nx1), (nx1, nx2)).copy_from(&(&s1.b * &e_x2));
    a.view_mut((nx1, 0), (nx2, nx1)).copy_from(&(&s2.b * &y_x1));
    a.view_mut((nx1, nx1), (nx2, nx2)).copy_from(&(&s2.a + &s2.b * &y_x2));
    b.view_mut((0, 0), (nx1, n)).copy_from(&(&s1.b * &e_u));
    b.view_mut((nx1, 0), (nx2, n)).copy_from(&(&s2.b * &y_u));
    c.view_mut((0, 0), (n, nx1)).copy_from(&y_x1);
    c.view_mut((0, nx1), (n, nx2)).copy_from(&y_x2);

    Ok(ClosedLoopModel {
        a,
        b,
        c,
        d: y_u,
        n_states1: nx1,
        n_states2: nx2,
    })
}

/// Ground-truth stability: every closed-loop eigenvalue has `Re < -tol_stab`.
pub fn oracle_stable(model: &ClosedLoopModel, tol_stab: f64) -> Result<OracleVerdict> {
    let eig = linalg::real_eigenvalues(&model.a)?;
    let abscissa = eig.iter().map(|l| l.re).fold(None, |acc: Option<f64>, r| {
        Some(acc.map_or(r, |a| a.max(r)))
    });
    Ok(OracleVerdict {
        stable: abscissa.is_none_or(|a| a < -tol_stab),
        spectral_abscissa: abscissa,
        n_states: model.a.nrows(),
    })
}
