//! First-order low-pass filtering and accelerometer series helpers.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{invalid, Result};

/// A uniformly sampled scalar signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    dt: f64,
    values: Vec<f64>,
}

impl Series {
    pub fn new(dt: f64, values: Vec<f64>) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(invalid(format!(
                "series dt must be finite and > 0, got {dt}"
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("series value at index {i} is not finite")));
        }
        Ok(Self { dt, values })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FilterSpec {
    cutoff_hz: f64,
    sample_rate_hz: f64,
}

impl FilterSpec {
    pub fn new(cutoff_hz: f64, sample_rate_hz: f64) -> Result<Self> {
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(invalid(format!(
                "sample rate must be finite and > 0, got {sample_rate_hz}"
            )));
        }
        if !(cutoff_hz.is_finite() && cutoff_hz > 0.0) {
            return Err(invalid(format!(
                "cutoff must be finite and > 0, got {cutoff_hz}"
            )));
        }
        if cutoff_hz >= sample_rate_hz / 2.0 {
            return Err(invalid(format!(
                "cutoff {cutoff_hz} Hz is not below the Nyquist frequency {} Hz",
                sample_rate_hz / 2.0
            )));
        }
        Ok(Self {
            cutoff_hz,
            sample_rate_hz,
        })
    }

    pub fn cutoff_hz(&self) -> f64 {
        self.cutoff_hz
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.sample_rate_hz
    }

    /// Continuous-time constant 1/(2π·fc).
    pub fn time_constant(&self) -> f64 {
        1.0 / (2.0 * PI * self.cutoff_hz)
    }
}

/// Coefficients of `y[n] = b0·x[n] + b1·x[n-1] - a1·y[n-1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterCoeffs {
    pub b0: f64,
    pub b1: f64,
    pub a1: f64,
}

impl FilterCoeffs {
    pub fn dc_gain(&self) -> f64 {
        (self.b0 + self.b1) / (1.0 + self.a1)
    }
}

/// First-order Butterworth low-pass via the bilinear transform, with the
/// cutoff pre-warped so the -3 dB point lands exactly on `cutoff_hz`.
pub fn design_lowpass(spec: &FilterSpec) -> FilterCoeffs {
    let warped = (PI * spec.cutoff_hz / spec.sample_rate_hz).tan();
    let norm = 1.0 / (1.0 + warped);
    FilterCoeffs {
        b0: warped * norm,
        b1: warped * norm,
        a1: (warped - 1.0) * norm,
    }
}

/// Causal single pass starting from zero filter state.
pub fn filter_values(coeffs: &FilterCoeffs, input: &[f64]) -> Vec<f64> {
    let mut prev_in = 0.0;
    let mut prev_out = 0.0;
    input
        .iter()
        .map(|&x| {
            let y = coeffs.b0 * x + coeffs.b1 * prev_in - coeffs.a1 * prev_out;
            prev_in = x;
            prev_out = y;
            y
        })
        .collect()
}

pub fn apply_filter(coeffs: &FilterCoeffs, series: &Series) -> Result<Series> {
    if series.is_empty() {
        return Err(invalid("cannot filter an empty series"));
    }
    Ok(Series {
        dt: series.dt,
        values: filter_values(coeffs, &series.values),
    })
}

/// Element-wise Euclidean norm of three axes.
pub fn absolute_acceleration(ax: &Series, ay: &Series, az: &Series) -> Result<Series> {
    if ax.len() != ay.len() || ax.len() != az.len() {
        return Err(invalid(format!(
            "axis lengths differ: {}, {}, {}",
            ax.len(),
            ay.len(),
            az.len()
        )));
    }
    let same_dt = |other: f64| (other - ax.dt).abs() <= 1e-12 * ax.dt;
    if !same_dt(ay.dt) || !same_dt(az.dt) {
        return Err(invalid("axis sample spacings differ"));
    }
    let values = ax
        .values
        .iter()
        .zip(&ay.values)
        .zip(&az.values)
        .map(|((x, y), z)| (x * x + y * y + z * z).sqrt())
        .collect();
    Ok(Series { dt: ax.dt, values })
}

/// Index and value of the global maximum; ties go to the earliest index.
pub fn peak_of(values: &[f64]) -> Option<(usize, f64)> {
    let mut iter = values.iter().copied().enumerate();
    let first = iter.next()?;
    Some(iter.fold(first, |best, cur| if cur.1 > best.1 { cur } else { best }))
}

pub fn peak(series: &Series) -> Result<(usize, f64)> {
    peak_of(&series.values).ok_or_else(|| invalid("cannot take the peak of an empty series"))
}

/// Linear interpolation of a uniform grid starting at t = 0. Times past the
/// end clamp to the last value.
pub(crate) fn interpolate(values: &[f64], dt: f64, t: f64) -> f64 {
    let pos = t / dt;
    let i = pos.floor() as usize;
    if i + 1 >= values.len() {
        return values[values.len() - 1];
    }
    let frac = pos - i as f64;
    values[i] + frac * (values[i + 1] - values[i])
}
