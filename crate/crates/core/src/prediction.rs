//! What the accelerometer is expected to read during an impact.
//!
//! The model's specific force is evaluated on the fine grid of the latency
//! filter, filtered causally from zero state, then linearly interpolated onto
//! the logger's sample times. Both synthetic data and the fitting loss go
//! through this one path so they agree bit for bit.

use crate::error::{invalid, Result};
use crate::msd::{ImpactInit, ImpactSolution, ModelParams};
use crate::signal::{design_lowpass, filter_values, interpolate, FilterSpec};

/// Filtered sensor prediction at `samples` logger ticks of `log_rate_hz`,
/// with tick 0 at the instant of contact.
pub fn predicted_reading(
    params: &ModelParams,
    filter: &FilterSpec,
    init: &ImpactInit,
    log_rate_hz: f64,
    samples: usize,
) -> Result<Vec<f64>> {
    if !(log_rate_hz.is_finite() && log_rate_hz > 0.0) {
        return Err(invalid(format!("log rate must be > 0, got {log_rate_hz}")));
    }
    if samples == 0 {
        return Ok(Vec::new());
    }
    let dt = filter.dt();
    let span = (samples - 1) as f64 / log_rate_hz;
    let fine = (span / dt).ceil() as usize + 2;

    let solution = ImpactSolution::new(params, init);
    let raw: Vec<f64> = (0..fine)
        .map(|i| {
            let (x, v) = solution.displacement_velocity(i as f64 * dt);
            params.sensor_reading(x, v)
        })
        .collect();
    let filtered = filter_values(&design_lowpass(filter), &raw);

    Ok((0..samples)
        .map(|j| interpolate(&filtered, dt, j as f64 / log_rate_hz))
        .collect())
}
