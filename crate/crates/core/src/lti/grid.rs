use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridScale {
    Log,
    Linear,
    Custom,
}

/// Strictly increasing, non-negative frequencies in rad/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    points: Vec<f64>,
    includes_zero: bool,
    scale: GridScale,
}

impl FrequencyGrid {
    /// Validates an explicit list of frequencies.
    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::BadRange("empty frequency list".into()));
        }
        if points.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::BadRange("frequencies must be finite and non-negative".into()));
        }
        if points.windows(2).any(|p| p[1] <= p[0]) {
            return Err(Error::BadRange("frequencies must be strictly increasing".into()));
        }
        Ok(Self {
            includes_zero: points[0] == 0.0,
            points,
            scale: GridScale::Custom,
        })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn includes_zero(&self) -> bool {
        self.includes_zero
    }

    pub fn scale(&self) -> GridScale {
        self.scale
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Log-spaced grid from `omega_min` to `omega_max` with `points_per_decade`
/// points per decade, both ends included, optionally preceded by `ω = 0`.
pub fn make_grid(omega_min: f64, omega_max: f64, points_per_decade: usize, include_zero: bool) -> Result<FrequencyGrid> {
    if !(omega_min.is_finite() && omega_max.is_finite()) || omega_min <= 0.0 || omega_min >= omega_max {
        return Err(Error::BadRange(format!(
            "need 0 < omega_min < omega_max, got [{omega_min}, {omega_max}]"
        )));
    }
    if points_per_decade == 0 {
        return Err(Error::BadRange("points_per_decade must be at least 1".into()));
    }
    let lo = omega_min.log10();
    let span = omega_max.log10() - lo;
    let ppd = points_per_decade as f64;
    let steps = (span * ppd + 1e-9).floor() as usize;
    let mut points = Vec::with_capacity(steps + 3);
    if include_zero {
        points.push(0.0);
    }
    for k in 0..=steps {
        points.push(10f64.powf(lo + k as f64 / ppd));
    }
    points[if include_zero { 1 } else { 0 }] = omega_min;
    let last = points.len() - 1;
    if (points[last] - omega_max).abs() <= 1e-9 * omega_max {
        points[last] = omega_max;
    } else {
        points.push(omega_max);
    }
    Ok(FrequencyGrid {
        points,
        includes_zero: include_zero,
        scale: GridScale::Log,
    })
}

/// Evenly spaced grid with `count` points over `[omega_min, omega_max]`.
pub fn make_linear_grid(omega_min: f64, omega_max: f64, count: usize) -> Result<FrequencyGrid> {
    if !(omega_min.is_finite() && omega_max.is_finite()) || omega_min < 0.0 || omega_min >= omega_max || count < 2 {
        return Err(Error::BadRange(format!(
            "need 0 <= omega_min < omega_max and count >= 2, got [{omega_min}, {omega_max}], {count}"
        )));
    }
    let step = (omega_max - omega_min) / (count - 1) as f64;
    let mut points: Vec<f64> = (0..count).map(|k| omega_min + k as f64 * step).collect();
    points[count - 1] = omega_max;
    Ok(FrequencyGrid {
        includes_zero: omega_min == 0.0,
        points,
        scale: GridScale::Linear,
    })
}
