//! Square MIMO LTI models, frequency responses, realizations and the
//! closed-loop eigenvalue oracle.

mod feedback;
mod grid;
pub mod json;
mod rational;
mod statespace;

pub use feedback::{close_loop, oracle_stable, ClosedLoopModel, OracleVerdict};
pub use grid::{make_grid, make_linear_grid, FrequencyGrid, GridScale};
pub use rational::{RationalFunction, POLE_ON_AXIS_RTOL};
pub use statespace::StateSpace;

use num_complex::Complex64;
use serde::Serialize;

use crate::{linalg, CMatrix, Error, RMatrix, Result};

/// Default threshold for Hurwitz tests: stable iff every pole has `Re < -TOL_STAB`.
pub const TOL_STAB: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum Representation {
    /// `n × n` grid of scalar transfer functions, row-major.
    Rational(Vec<Vec<RationalFunction>>),
    StateSpace(StateSpace),
}

/// Square transfer matrix `H(s)` in one of two representations.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferMatrix {
    name: String,
    n: usize,
    repr: Representation,
}

/// Outcome of the RH∞ membership test.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RhInfVerdict {
    pub in_rh_inf: bool,
    pub proper: bool,
    /// First improper entry, row-major.
    pub improper_entry: Option<(usize, usize)>,
    /// Pole with the largest real part when it violates the stability margin.
    pub offending_pole: Option<Complex64>,
    /// Largest pole real part, absent for models without poles.
    pub max_real_part: Option<f64>,
}

impl RhInfVerdict {
    /// A pole sits in the closed right half-plane beyond the margin, i.e. the
    /// model is unstable rather than marginal.
    pub fn has_unstable_pole(&self, tol: f64) -> bool {
        self.max_real_part.is_some_and(|r| r > tol)
    }
}

impl TransferMatrix {
    pub fn rational(name: impl Into<String>, entries: Vec<Vec<RationalFunction>>) -> Result<Self> {
        let n = entries.len();
        if n == 0 {
            return Err(Error::Dimension("empty transfer matrix".into()));
        }
        if let Some((i, row)) = entries.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(Error::Dimension(format!("row {i} has {} entries, expected {n}", row.len())));
        }
        Ok(Self {
            name: name.into(),
            n,
            repr: Representation::Rational(entries),
        })
    }

    pub fn state_space(name: impl Into<String>, ss: StateSpace) -> Result<Self> {
        let n = ss.n_io();
        if n == 0 {
            return Err(Error::Dimension("empty transfer matrix".into()));
        }
        Ok(Self {
            name: name.into(),
            n,
            repr: Representation::StateSpace(ss),
        })
    }

    /// Memoryless gain `D`.
    pub fn static_gain(name: impl Into<String>, d: RMatrix) -> Result<Self> {
        Self::state_space(name, StateSpace::static_gain(d)?)
    }

    pub fn identity(n: usize) -> Self {
        Self::static_gain(format!("I{n}"), RMatrix::identity(n, n)).expect("identity is square")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn representation(&self) -> &Representation {
        &self.repr
    }

    /// `H(jω)`.
    pub fn eval_freq(&self, omega: f64) -> Result<CMatrix> {
        if !omega.is_finite() || omega < 0.0 {
            return Err(Error::BadRange(format!("frequency must be finite and >= 0, got {omega}")));
        }
        match &self.repr {
            Representation::Rational(entries) => {
                let mut m = CMatrix::zeros(self.n, self.n);
                for (i, row) in entries.iter().enumerate() {
                    for (j, h) in row.iter().enumerate() {
                        m[(i, j)] = h.eval_jw(omega).ok_or(Error::PoleOnAxis { omega, row: i, col: j })?;
                    }
                }
                Ok(m)
            }
            Representation::StateSpace(ss) => ss.eval_jw(omega),
        }
    }

    /// High-frequency limit used as the synthetic `ω = ∞` sample: `D` for a
    /// realization, the leading-coefficient ratios for rational entries.
    pub fn eval_infinity(&self) -> CMatrix {
        match &self.repr {
            Representation::Rational(entries) => CMatrix::from_fn(self.n, self.n, |i, j| {
                Complex64::new(entries[i][j].high_frequency_limit(), 0.0)
            }),
            Representation::StateSpace(ss) => ss.d.map(|v| Complex64::new(v, 0.0)),
        }
    }

    pub fn is_proper(&self) -> bool {
        self.first_improper().is_none()
    }

    fn first_improper(&self) -> Option<(usize, usize)> {
        match &self.repr {
            Representation::Rational(entries) => entries.iter().enumerate().find_map(|(i, row)| {
                row.iter().position(|h| !h.is_proper()).map(|j| (i, j))
            }),
            Representation::StateSpace(_) => None,
        }
    }

    /// Denominator roots of every entry (no pole-zero cancellation), or the
    /// eigenvalues of `A` for a realization.
    pub fn poles(&self) -> Result<Vec<Complex64>> {
        match &self.repr {
            Representation::Rational(entries) => {
                let mut poles = Vec::new();
                for h in entries.iter().flatten() {
                    poles.extend(linalg::poly_roots(h.den())?);
                }
                Ok(poles)
            }
            Representation::StateSpace(ss) => linalg::real_eigenvalues(&ss.a),
        }
    }

    /// Proper and every pole strictly left of `-tol_stab`.
    pub fn is_rh_inf(&self, tol_stab: f64) -> Result<RhInfVerdict> {
        let improper_entry = self.first_improper();
        let poles = self.poles()?;
        let worst = poles.iter().copied().max_by(|a, b| a.re.total_cmp(&b.re));
        let offending_pole = worst.filter(|p| p.re >= -tol_stab);
        Ok(RhInfVerdict {
            in_rh_inf: improper_entry.is_none() && offending_pole.is_none(),
            proper: improper_entry.is_none(),
            improper_entry,
            offending_pole,
            max_real_part: worst.map(|p| p.re),
        })
    }

    /// Entrywise controllable-canonical realization, aggregated block-diagonally.
    pub fn to_state_space(&self) -> Result<StateSpace> {
        match &self.repr {
            Representation::StateSpace(ss) => Ok(ss.clone()),
            Representation::Rational(entries) => realize(entries),
        }
    }

    /// The same system in state-space form.
    pub fn rational_to_statespace(&self) -> Result<TransferMatrix> {
        Self::state_space(self.name.clone(), self.to_state_space()?)
    }
}

fn realize(entries: &[Vec<RationalFunction>]) -> Result<StateSpace> {
    let n = entries.len();
    for (i, row) in entries.iter().enumerate() {
        for (j, h) in row.iter().enumerate() {
            if !h.is_proper() {
                return Err(Error::ImproperEntry {
                    row: i,
                    col: j,
                    num_degree: h.num_degree(),
                    den_degree: h.den_degree(),
                });
            }
        }
    }
    let nx: usize = entries.iter().flatten().map(|h| h.den_degree()).sum();
    let mut a = RMatrix::zeros(nx, nx);
    let mut b = RMatrix::zeros(nx, n);
    let mut c = RMatrix::zeros(n, nx);
    let mut d = RMatrix::zeros(n, n);
    let mut offset = 0;
    for (i, row) in entries.iter().enumerate() {
        for (j, h) in row.iter().enumerate() {
            let m = h.den_degree();
            let lead = h.den()[0];
            let den: Vec<f64> = h.den().iter().map(|v| v / lead).collect();
            // numerator padded to degree m
            let mut num = vec![0.0; m + 1];
            if !h.is_zero() {
                let k = h.num().len();
                for (t, v) in h.num().iter().enumerate() {
                    num[m + 1 - k + t] = v / lead;
                }
            }
            let feedthrough = num[0];
            d[(i, j)] = feedthrough;
            for k in 0..m {
                a[(offset, offset + k)] = -den[k + 1];
                if k > 0 {
                    a[(offset + k, offset + k - 1)] = 1.0;
                }
                c[(i, offset + k)] = num[k + 1] - feedthrough * den[k + 1];
            }
            if m > 0 {
                b[(offset, j)] = 1.0;
            }
            offset += m;
        }
    }
    StateSpace::new(a, b, c, d)
}

/// Free-function form of [`TransferMatrix::eval_freq`].
pub fn eval_freq(h: &TransferMatrix, omega: f64) -> Result<CMatrix> {
    h.eval_freq(omega)
}

pub fn poles(h: &TransferMatrix) -> Result<Vec<Complex64>> {
    h.poles()
}

pub fn is_rh_inf(h: &TransferMatrix) -> Result<RhInfVerdict> {
    h.is_rh_inf(TOL_STAB)
}

pub fn rational_to_statespace(h: &TransferMatrix) -> Result<TransferMatrix> {
    h.rational_to_statespace()
}
