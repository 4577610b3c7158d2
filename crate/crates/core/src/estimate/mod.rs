//! Parameter identification from static and drop-test data.
//!
//! Damping (and optionally stiffness) is chosen to minimize the mean squared
//! error between the filtered model prediction and the measured |acc| from
//! the end of free fall up to the peak. Every altitude group carries the same
//! weight no matter how many trials it holds.

mod simplex;
mod stiffness;

pub use simplex::{nelder_mead, Minimum, NelderMeadOptions};
pub use stiffness::{fit_stiffness, read_static_csv, StaticMeasurement, StiffnessFit};

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::ingest::{Trial, TrialGroup};
use crate::msd::{ImpactInit, ModelParams};
use crate::prediction::predicted_reading;
use crate::signal::FilterSpec;

/// Relative loss gap within which the static stiffness is preferred over a
/// jointly fitted one.
pub const ADOPTION_REL_TOL: f64 = 1e-4;

fn measured_window(trial: &Trial) -> Result<Vec<f64>> {
    let seg = trial.segment;
    if seg.peak <= seg.impact_start {
        return Err(Error::DegenerateWindow {
            index: seg.impact_start,
        });
    }
    if seg.peak >= trial.log.len() {
        return Err(invalid(format!(
            "segment peak {} is outside log {} of length {}",
            seg.peak,
            trial.log.trial_id,
            trial.log.len()
        )));
    }
    let range = seg.impact_start..=seg.peak;
    let (ax, ay, az) = (
        trial.log.ax.values(),
        trial.log.ay.values(),
        trial.log.az.values(),
    );
    Ok(range
        .map(|i| (ax[i] * ax[i] + ay[i] * ay[i] + az[i] * az[i]).sqrt())
        .collect())
}

fn mse(model: &[f64], measured: &[f64]) -> f64 {
    let sum: f64 = model
        .iter()
        .zip(measured)
        .map(|(m, d)| (m - d).powi(2))
        .sum();
    sum / measured.len() as f64
}

/// MSE between the filtered model and the measured |acc| over
/// `[impact_start, peak]`, with model t = 0 at `impact_start`.
pub fn trial_loss(params: &ModelParams, filter: &FilterSpec, trial: &Trial) -> Result<f64> {
    let measured = measured_window(trial)?;
    let init = ImpactInit::from_altitude(params, trial.log.altitude)?;
    let model = predicted_reading(
        params,
        filter,
        &init,
        trial.log.sample_rate_hz,
        measured.len(),
    )?;
    Ok(mse(&model, &measured))
}

/// Measurement windows extracted once so repeated loss evaluations only
/// recompute the model side.
#[derive(Debug, Clone)]
pub struct PreparedGroups {
    groups: Vec<PreparedGroup>,
}

#[derive(Debug, Clone)]
struct PreparedGroup {
    altitude: f64,
    trials: Vec<PreparedTrial>,
}

#[derive(Debug, Clone)]
struct PreparedTrial {
    rate: f64,
    measured: Vec<f64>,
}

impl PreparedGroups {
    pub fn new(groups: &[TrialGroup]) -> Result<Self> {
        if groups.is_empty() {
            return Err(invalid("no trial groups"));
        }
        let groups = groups
            .iter()
            .map(|g| {
                let trials = g
                    .trials()
                    .iter()
                    .map(|t| {
                        Ok(PreparedTrial {
                            rate: t.log.sample_rate_hz,
                            measured: measured_window(t)?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(PreparedGroup {
                    altitude: g.altitude(),
                    trials,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { groups })
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    /// Mean over groups of the mean trial loss in each group. The reduction
    /// order is fixed, so results are bit-stable.
    pub fn weighted_loss(&self, params: &ModelParams, filter: &FilterSpec) -> Result<f64> {
        let mut total = 0.0;
        for group in &self.groups {
            let init = ImpactInit::from_altitude(params, group.altitude)?;
            let mut cache: Option<(f64, Vec<f64>)> = None;
            let longest = group
                .trials
                .iter()
                .map(|t| t.measured.len())
                .max()
                .unwrap_or(0);
            let mut sum = 0.0;
            for trial in &group.trials {
                let model = match &cache {
                    Some((rate, model)) if *rate == trial.rate => model,
                    _ => {
                        let model = predicted_reading(params, filter, &init, trial.rate, longest)?;
                        &cache.insert((trial.rate, model)).1
                    }
                };
                sum += mse(&model[..trial.measured.len()], &trial.measured);
            }
            total += sum / group.trials.len() as f64;
        }
        Ok(total / self.groups.len() as f64)
    }
}

/// Altitude-balanced loss over all groups.
pub fn weighted_loss(
    params: &ModelParams,
    filter: &FilterSpec,
    groups: &[TrialGroup],
) -> Result<f64> {
    PreparedGroups::new(groups)?.weighted_loss(params, filter)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "mode", content = "k", rename_all = "kebab-case")]
pub enum StiffnessMode {
    /// Hold k at the given value and fit c alone.
    Fixed(f64),
    /// Fit c and k together.
    Joint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitResult {
    pub c: f64,
    pub k: f64,
    pub loss: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Fits damping (and stiffness in joint mode) by Nelder–Mead on the
/// logarithms of the parameters. Mass and gravity come from `base`; its
/// damping and stiffness are ignored.
pub fn fit_damping(
    groups: &[TrialGroup],
    filter: &FilterSpec,
    base: &ModelParams,
    mode: StiffnessMode,
    c0: f64,
    k0: f64,
    options: &NelderMeadOptions,
) -> Result<FitResult> {
    let prepared = PreparedGroups::new(groups)?;
    fit_damping_prepared(&prepared, filter, base, mode, c0, k0, options)
}

pub fn fit_damping_prepared(
    prepared: &PreparedGroups,
    filter: &FilterSpec,
    base: &ModelParams,
    mode: StiffnessMode,
    c0: f64,
    k0: f64,
    options: &NelderMeadOptions,
) -> Result<FitResult> {
    if !(c0.is_finite() && c0 > 0.0) {
        return Err(invalid(format!("c0 must be > 0, got {c0}")));
    }
    let params_at = |theta: &[f64]| -> Result<ModelParams> {
        let c = theta[0].exp();
        let k = match mode {
            StiffnessMode::Fixed(k) => k,
            StiffnessMode::Joint => theta[1].exp(),
        };
        ModelParams::with_gravity(base.mass(), c, k, base.gravity())
    };
    let start = match mode {
        StiffnessMode::Fixed(k) => {
            if !(k.is_finite() && k > 0.0) {
                return Err(invalid(format!("fixed stiffness must be > 0, got {k}")));
            }
            vec![c0.ln()]
        }
        StiffnessMode::Joint => {
            if !(k0.is_finite() && k0 > 0.0) {
                return Err(invalid(format!("k0 must be > 0, got {k0}")));
            }
            vec![c0.ln(), k0.ln()]
        }
    };
    let objective = |theta: &[f64]| {
        params_at(theta)
            .and_then(|p| prepared.weighted_loss(&p, filter))
            .unwrap_or(f64::INFINITY)
    };
    let min = nelder_mead(objective, &start, options)?;
    let best = params_at(&min.x)?;
    Ok(FitResult {
        c: best.damping(),
        k: best.stiffness(),
        loss: min.value,
        iterations: min.iterations,
        converged: min.converged,
    })
}

/// Picks the fit to adopt: the one with static stiffness unless the joint
/// fit beats it by more than [`ADOPTION_REL_TOL`] relative loss.
pub fn adopt<'a>(fixed_k: &'a FitResult, joint: &'a FitResult) -> &'a FitResult {
    if fixed_k.loss - joint.loss <= ADOPTION_REL_TOL * joint.loss.abs() {
        fixed_k
    } else {
        joint
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LossSurface {
    pub c_values: Vec<f64>,
    pub k_values: Vec<f64>,
    /// `loss[i][j]` is evaluated at `(c_values[i], k_values[j])`.
    pub loss: Vec<Vec<f64>>,
    /// ln(1 + loss), for contour plots.
    pub transformed: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridMinimum {
    pub c_index: usize,
    pub k_index: usize,
    pub c: f64,
    pub k: f64,
    pub loss: f64,
}

impl LossSurface {
    /// Smallest grid value; ties go to the first in row-major order.
    pub fn argmin(&self) -> GridMinimum {
        let mut best = GridMinimum {
            c_index: 0,
            k_index: 0,
            c: self.c_values[0],
            k: self.k_values[0],
            loss: self.loss[0][0],
        };
        for (i, row) in self.loss.iter().enumerate() {
            for (j, &z) in row.iter().enumerate() {
                if z < best.loss {
                    best = GridMinimum {
                        c_index: i,
                        k_index: j,
                        c: self.c_values[i],
                        k: self.k_values[j],
                        loss: z,
                    };
                }
            }
        }
        best
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}

fn check_range(name: &str, (lo, hi): (f64, f64), n: usize) -> Result<()> {
    if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo < hi) {
        return Err(invalid(format!(
            "{name} range must satisfy 0 < lo < hi, got ({lo}, {hi})"
        )));
    }
    if n < 2 {
        return Err(invalid(format!("{name} resolution must be >= 2, got {n}")));
    }
    Ok(())
}

/// Evaluates the weighted loss on an evenly spaced (c, k) grid.
pub fn loss_surface(
    groups: &[TrialGroup],
    filter: &FilterSpec,
    base: &ModelParams,
    c_range: (f64, f64),
    k_range: (f64, f64),
    resolution: (usize, usize),
) -> Result<LossSurface> {
    check_range("c", c_range, resolution.0)?;
    check_range("k", k_range, resolution.1)?;
    let prepared = PreparedGroups::new(groups)?;
    let c_values = linspace(c_range.0, c_range.1, resolution.0);
    let k_values = linspace(k_range.0, k_range.1, resolution.1);
    let loss = c_values
        .iter()
        .map(|&c| {
            k_values
                .iter()
                .map(|&k| {
                    let p = ModelParams::with_gravity(base.mass(), c, k, base.gravity())?;
                    prepared.weighted_loss(&p, filter)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let transformed = loss
        .iter()
        .map(|row| row.iter().map(|z| z.ln_1p()).collect())
        .collect();
    Ok(LossSurface {
        c_values,
        k_values,
        loss,
        transformed,
    })
}
