use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Relative threshold below which a denominator is treated as vanishing.
pub const POLE_ON_AXIS_RTOL: f64 = 1e-12;

/// Ratio of two real polynomials, coefficients in descending powers of `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RationalFunction {
    num: Vec<f64>,
    den: Vec<f64>,
}

fn strip_leading_zeros(c: &[f64]) -> Vec<f64> {
    match c.iter().position(|&v| v != 0.0) {
        Some(i) => c[i..].to_vec(),
        None => vec![0.0],
    }
}

/// Horner evaluation; also returns `Σ |c_k| |s|^k` for relative tolerances.
pub(crate) fn horner(coeffs: &[f64], s: Complex64) -> (Complex64, f64) {
    let abs_s = s.norm();
    let mut value = Complex64::new(0.0, 0.0);
    let mut scale = 0.0;
    for &c in coeffs {
        value = value * s + c;
        scale = scale * abs_s + c.abs();
    }
    (value, scale)
}

impl RationalFunction {
    pub fn new(num: Vec<f64>, den: Vec<f64>) -> Result<Self> {
        if num.is_empty() || den.is_empty() {
            return Err(Error::InvalidModel("empty coefficient list".into()));
        }
        if num.iter().chain(den.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("polynomial coefficients".into()));
        }
        let den = strip_leading_zeros(&den);
        if den == [0.0] {
            return Err(Error::InvalidModel("denominator is the zero polynomial".into()));
        }
        Ok(Self {
            num: strip_leading_zeros(&num),
            den,
        })
    }

    /// Constant gain `k`.
    pub fn constant(k: f64) -> Self {
        Self {
            num: vec![k],
            den: vec![1.0],
        }
    }

    pub fn num(&self) -> &[f64] {
        &self.num
    }

    pub fn den(&self) -> &[f64] {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.iter().all(|&c| c == 0.0)
    }

    /// Degree of the numerator; the zero polynomial reports 0.
    pub fn num_degree(&self) -> usize {
        self.num.len() - 1
    }

    pub fn den_degree(&self) -> usize {
        self.den.len() - 1
    }

    pub fn is_proper(&self) -> bool {
        self.is_zero() || self.num_degree() <= self.den_degree()
    }

    /// Value at `s = jω`, or `None` when the denominator vanishes there.
    pub fn eval_jw(&self, omega: f64) -> Option<Complex64> {
        let s = Complex64::new(0.0, omega);
        let (d, scale) = horner(&self.den, s);
        if d.norm() <= POLE_ON_AXIS_RTOL * scale {
            return None;
        }
        Some(horner(&self.num, s).0 / d)
    }

    /// Limit as `|s| → ∞` for a proper function.
    pub fn high_frequency_limit(&self) -> f64 {
        if self.is_zero() || self.num_degree() < self.den_degree() {
            0.0
        } else {
            self.num[0] / self.den[0]
        }
    }
}
