use nalgebra::LU;
use num_complex::Complex64;

use crate::{CMatrix, Error, RMatrix, Result};

/// Relative pivot threshold below which `(jωI − A)` counts as singular.
const SINGULAR_RTOL: f64 = 1e-14;

/// Continuous-time realization `ẋ = Ax + Bu, y = Cx + Du` with square `D`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    pub a: RMatrix,
    pub b: RMatrix,
    pub c: RMatrix,
    pub d: RMatrix,
}

impl StateSpace {
    pub fn new(a: RMatrix, b: RMatrix, c: RMatrix, d: RMatrix) -> Result<Self> {
        let nx = a.nrows();
        let n = d.nrows();
        if a.ncols() != nx {
            return Err(Error::Dimension(format!("A is {}x{}, expected square", nx, a.ncols())));
        }
        if d.ncols() != n {
            return Err(Error::Dimension(format!("D is {}x{}, expected square", n, d.ncols())));
        }
        if b.nrows() != nx || b.ncols() != n {
            return Err(Error::Dimension(format!(
                "B is {}x{}, expected {}x{}",
                b.nrows(),
                b.ncols(),
                nx,
                n
            )));
        }
        if c.nrows() != n || c.ncols() != nx {
            return Err(Error::Dimension(format!(
                "C is {}x{}, expected {}x{}",
                c.nrows(),
                c.ncols(),
                n,
                nx
            )));
        }
        if a.iter().chain(b.iter()).chain(c.iter()).chain(d.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("state-space matrices".into()));
        }
        Ok(Self { a, b, c, d })
    }

    /// Memoryless gain `D` (no states).
    pub fn static_gain(d: RMatrix) -> Result<Self> {
        let n = d.nrows();
        Self::new(RMatrix::zeros(0, 0), RMatrix::zeros(0, n), RMatrix::zeros(n, 0), d)
    }

    pub fn n_states(&self) -> usize {
        self.a.nrows()
    }

    pub fn n_io(&self) -> usize {
        self.d.nrows()
    }

    /// `C (jωI − A)^{-1} B + D`.
    pub fn eval_jw(&self, omega: f64) -> Result<CMatrix> {
        let to_c = |m: &RMatrix| m.map(|v| Complex64::new(v, 0.0));
        let d = to_c(&self.d);
        let nx = self.n_states();
        if nx == 0 {
            return Ok(d);
        }
        let mut m = -to_c(&self.a);
        for i in 0..nx {
            m[(i, i)] += Complex64::new(0.0, omega);
        }
        let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let lu = LU::new(m);
        let u = lu.u();
        let min_pivot = (0..nx).map(|i| u[(i, i)].norm()).fold(f64::INFINITY, f64::min);
        if min_pivot <= SINGULAR_RTOL * scale {
            return Err(Error::Singular { omega });
        }
        let x = lu.solve(&to_c(&self.b)).ok_or(Error::Singular { omega })?;
        Ok(to_c(&self.c) * x + d)
    }
}
