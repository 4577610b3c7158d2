//! Accelerometer trial logs: parsing, impact segmentation and synthetic
//! trial generation.
//!
//! Log files are line oriented text:
//!
//! ```text
//! # trial_id=h100_t001
//! # altitude_cm=100
//! # sample_rate_hz=1000
//! # units=g
//! 0,0.01,-0.02,1.003
//! 0.001,0.00,-0.01,0.998
//! ```
//!
//! Other `#` lines are treated as comments. Data rows are `t,ax,ay,az`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::error::{invalid, Error, Result, SegmentPhase};
use crate::msd::{ImpactInit, ModelParams};
use crate::prediction::predicted_reading;
use crate::signal::{absolute_acceleration, peak_of, FilterSpec, Series};

/// Standard gravity used for converting logs recorded in g.
pub const STANDARD_GRAVITY: f64 = 9.80665;

const SPACING_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Units {
    G,
    MetersPerSecondSquared,
}

impl Units {
    fn scale(self) -> f64 {
        match self {
            Units::G => STANDARD_GRAVITY,
            Units::MetersPerSecondSquared => 1.0,
        }
    }

    fn label(self) -> &'static str {
        match self {
            Units::G => "g",
            Units::MetersPerSecondSquared => "m/s2",
        }
    }
}

/// One tri-axial accelerometer trial, stored in m/s².
#[derive(Debug, Clone, PartialEq)]
pub struct AccelLog {
    pub trial_id: String,
    /// Drop altitude in metres.
    pub altitude: f64,
    pub sample_rate_hz: f64,
    /// Timestamp of the first row, in seconds.
    pub t0: f64,
    pub ax: Series,
    pub ay: Series,
    pub az: Series,
}

impl AccelLog {
    pub fn new(
        trial_id: impl Into<String>,
        altitude: f64,
        sample_rate_hz: f64,
        ax: Vec<f64>,
        ay: Vec<f64>,
        az: Vec<f64>,
    ) -> Result<Self> {
        if !(altitude.is_finite() && altitude > 0.0) {
            return Err(invalid(format!("altitude must be > 0, got {altitude}")));
        }
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(invalid(format!(
                "sample rate must be > 0, got {sample_rate_hz}"
            )));
        }
        if ax.len() != ay.len() || ax.len() != az.len() {
            return Err(invalid("axis lengths differ"));
        }
        if ax.len() < 2 {
            return Err(invalid("a log needs at least two samples"));
        }
        let dt = 1.0 / sample_rate_hz;
        Ok(Self {
            trial_id: trial_id.into(),
            altitude,
            sample_rate_hz,
            t0: 0.0,
            ax: Series::new(dt, ax)?,
            ay: Series::new(dt, ay)?,
            az: Series::new(dt, az)?,
        })
    }

    pub fn len(&self) -> usize {
        self.ax.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ax.is_empty()
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.sample_rate_hz
    }

    pub fn magnitude(&self) -> Series {
        absolute_acceleration(&self.ax, &self.ay, &self.az)
            .expect("log axes share length and spacing")
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_number(line: usize, field: &str, what: &str) -> Result<f64> {
    let value: f64 = field
        .trim()
        .parse()
        .map_err(|_| parse_err(line, format!("{what}: '{}' is not a number", field.trim())))?;
    if !value.is_finite() {
        return Err(parse_err(line, format!("{what} is not finite")));
    }
    Ok(value)
}

/// Parses a trial log. Line numbers in errors are 1-based.
pub fn parse_log(text: &str) -> Result<AccelLog> {
    let mut trial_id = None;
    let mut altitude_cm = None;
    let mut sample_rate = None;
    let mut units = None;
    let mut rows: Vec<(usize, [f64; 4])> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            let Some((key, value)) = comment.split_once('=') else {
                continue;
            };
            let value = value.trim();
            match key.trim() {
                "trial_id" => {
                    if value.is_empty() {
                        return Err(parse_err(line, "empty trial_id"));
                    }
                    trial_id = Some(value.to_string());
                }
                "altitude_cm" => altitude_cm = Some(parse_number(line, value, "altitude_cm")?),
                "sample_rate_hz" => {
                    sample_rate = Some(parse_number(line, value, "sample_rate_hz")?)
                }
                "units" => {
                    units = Some(match value {
                        "g" => Units::G,
                        "m/s2" => Units::MetersPerSecondSquared,
                        other => {
                            return Err(parse_err(
                                line,
                                format!("unknown units '{other}', expected g or m/s2"),
                            ))
                        }
                    })
                }
                _ => {}
            }
            continue;
        }
        if rows.is_empty() && trimmed.replace(' ', "") == "t,ax,ay,az" {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        if fields.len() != 4 {
            return Err(parse_err(
                line,
                format!("expected 4 fields (t,ax,ay,az), found {}", fields.len()),
            ));
        }
        let mut row = [0.0; 4];
        for (slot, (field, name)) in row
            .iter_mut()
            .zip(fields.iter().zip(["t", "ax", "ay", "az"]))
        {
            *slot = parse_number(line, field, name)?;
        }
        rows.push((line, row));
    }

    let last_line = text.lines().count().max(1);
    let missing = |name: &str| parse_err(last_line, format!("missing header '# {name}=...'"));
    let trial_id = trial_id.ok_or_else(|| missing("trial_id"))?;
    let altitude_cm = altitude_cm.ok_or_else(|| missing("altitude_cm"))?;
    let sample_rate = sample_rate.ok_or_else(|| missing("sample_rate_hz"))?;
    let units = units.ok_or_else(|| missing("units"))?;

    if altitude_cm.is_nan() || altitude_cm <= 0.0 {
        return Err(parse_err(last_line, "altitude_cm must be > 0"));
    }
    if sample_rate.is_nan() || sample_rate <= 0.0 {
        return Err(parse_err(last_line, "sample_rate_hz must be > 0"));
    }
    if rows.len() < 2 {
        return Err(parse_err(last_line, "a log needs at least two data rows"));
    }

    let dt = 1.0 / sample_rate;
    for pair in rows.windows(2) {
        let (line, cur) = pair[1];
        let step = cur[0] - pair[0].1[0];
        if step <= 0.0 {
            return Err(parse_err(line, "timestamps must be strictly increasing"));
        }
        if (step - dt).abs() > SPACING_TOL {
            return Err(parse_err(
                line,
                format!("sample spacing {step} s does not match 1/sample_rate_hz = {dt} s"),
            ));
        }
    }

    let scale = units.scale();
    let axis = |k: usize| rows.iter().map(|(_, r)| r[k] * scale).collect::<Vec<_>>();
    let mut log = AccelLog::new(
        trial_id,
        altitude_cm / 100.0,
        sample_rate,
        axis(1),
        axis(2),
        axis(3),
    )?;
    log.t0 = rows[0].1[0];
    Ok(log)
}

/// Serializes a log, writing accelerations in `units`. `comments` are
/// emitted verbatim as extra `#` lines before the data.
pub fn write_log(log: &AccelLog, units: Units, comments: &[String]) -> String {
    let mut out = String::new();
    for c in comments {
        let _ = writeln!(out, "# {c}");
    }
    let _ = writeln!(out, "# trial_id={}", log.trial_id);
    let _ = writeln!(out, "# altitude_cm={}", log.altitude * 100.0);
    let _ = writeln!(out, "# sample_rate_hz={}", log.sample_rate_hz);
    let _ = writeln!(out, "# units={}", units.label());
    let scale = units.scale();
    let dt = log.dt();
    let axes = log
        .ax
        .values()
        .iter()
        .zip(log.ay.values())
        .zip(log.az.values());
    for (i, ((x, y), z)) in axes.enumerate() {
        let t = log.t0 + i as f64 * dt;
        let _ = writeln!(out, "{t},{},{},{}", x / scale, y / scale, z / scale);
    }
    out
}

/// Sample indices bounding the analysed part of an impact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ImpactSegment {
    pub freefall_start: usize,
    pub impact_start: usize,
    pub peak: usize,
}

impl ImpactSegment {
    pub fn new(
        freefall_start: usize,
        impact_start: usize,
        peak: usize,
        len: usize,
    ) -> Result<Self> {
        if !(freefall_start < impact_start && impact_start <= peak && peak < len) {
            return Err(invalid(format!(
                "segment indices ({freefall_start}, {impact_start}, {peak}) violate \
                 freefall_start < impact_start <= peak < {len}"
            )));
        }
        Ok(Self {
            freefall_start,
            impact_start,
            peak,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SegmentConfig {
    /// |acc| below this counts as free fall, m/s².
    pub ff_threshold: f64,
    /// Shortest run of free fall that is accepted, s.
    pub ff_min_duration: f64,
    /// |acc| at or above this marks the impact onset, m/s².
    pub impact_threshold: f64,
    /// Search window for the peak after the onset, s.
    pub peak_window: f64,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        Self {
            ff_threshold: 3.0,
            ff_min_duration: 0.05,
            impact_threshold: 3.0 * STANDARD_GRAVITY,
            peak_window: 0.1,
        }
    }
}

impl SegmentConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("ff_threshold", self.ff_threshold),
            ("ff_min_duration", self.ff_min_duration),
            ("impact_threshold", self.impact_threshold),
            ("peak_window", self.peak_window),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(format!("{name} must be > 0, got {v}")));
            }
        }
        if self.ff_threshold >= self.impact_threshold {
            return Err(invalid("ff_threshold must be below impact_threshold"));
        }
        Ok(())
    }
}

/// Locates the free fall, the impact onset and the peak that follows it.
pub fn segment_impact(log: &AccelLog, config: &SegmentConfig) -> Result<ImpactSegment> {
    config.validate()?;
    let mag = log.magnitude();
    let mag = mag.values();
    let fs = log.sample_rate_hz;
    let min_run = ((config.ff_min_duration * fs - 1e-9).ceil() as usize).max(1);

    let mut run_start = 0;
    let mut run_len = 0;
    let mut freefall = None;
    for (i, &m) in mag.iter().enumerate() {
        if m < config.ff_threshold {
            if run_len == 0 {
                run_start = i;
            }
            run_len += 1;
            if run_len >= min_run {
                freefall = Some(run_start);
                break;
            }
        } else {
            run_len = 0;
        }
    }
    let freefall_start = freefall.ok_or_else(|| Error::Segmentation {
        phase: SegmentPhase::FreeFall,
        detail: format!(
            "no run of |acc| < {} m/s² lasting {} s",
            config.ff_threshold, config.ff_min_duration
        ),
    })?;

    let search_from = freefall_start + min_run;
    let impact_start = mag[search_from.min(mag.len())..]
        .iter()
        .position(|&m| m >= config.impact_threshold)
        .map(|p| p + search_from)
        .ok_or_else(|| Error::Segmentation {
            phase: SegmentPhase::Impact,
            detail: format!(
                "|acc| never reaches {} m/s² after the free fall",
                config.impact_threshold
            ),
        })?;

    let window = (config.peak_window * fs).round() as usize;
    let end = (impact_start + window + 1).min(mag.len());
    let (offset, _) = peak_of(&mag[impact_start..end]).expect("window holds the onset sample");
    ImpactSegment::new(
        freefall_start,
        impact_start,
        impact_start + offset,
        mag.len(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub log_rate_hz: f64,
    /// Time at rest before release, s.
    pub pre_roll: f64,
    /// Time recorded after contact, s.
    pub post_roll: f64,
    /// Standard deviation of white noise added to each axis, m/s².
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            log_rate_hz: 1000.0,
            pre_roll: 0.2,
            post_roll: 0.2,
            noise_sigma: 0.0,
            seed: 0,
        }
    }
}

/// Builds a log of a drop: rest, free fall, then the filtered model
/// response, all on the z axis plus seeded Gaussian noise on every axis.
/// Returns the log together with the segment it was built from.
pub fn generate_synthetic_log(
    params: &ModelParams,
    altitude: f64,
    filter: &FilterSpec,
    config: &SynthConfig,
    trial_id: impl Into<String>,
) -> Result<(AccelLog, ImpactSegment)> {
    if !(altitude.is_finite() && altitude > 0.0) {
        return Err(invalid(format!("altitude must be > 0, got {altitude}")));
    }
    if !(config.noise_sigma.is_finite() && config.noise_sigma >= 0.0) {
        return Err(invalid("noise_sigma must be >= 0"));
    }
    for (name, v) in [
        ("pre_roll", config.pre_roll),
        ("post_roll", config.post_roll),
        ("log_rate_hz", config.log_rate_hz),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(invalid(format!("{name} must be > 0, got {v}")));
        }
    }
    let fs = config.log_rate_hz;
    let g = params.gravity();
    let n_rest = ((config.pre_roll * fs).round() as usize).max(1);
    let n_fall = (((2.0 * altitude / g).sqrt() * fs).round() as usize).max(1);
    let n_impact = ((config.post_roll * fs).round() as usize).max(2);

    let init = ImpactInit::from_altitude(params, altitude)?;
    let impact = predicted_reading(params, filter, &init, fs, n_impact)?;

    let mut az = Vec::with_capacity(n_rest + n_fall + n_impact);
    az.extend(std::iter::repeat_n(g, n_rest));
    az.extend(std::iter::repeat_n(0.0, n_fall));
    az.extend_from_slice(&impact);
    let len = az.len();
    let mut ax = vec![0.0; len];
    let mut ay = vec![0.0; len];

    if config.noise_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let normal = Normal::new(0.0, config.noise_sigma).map_err(|e| invalid(e.to_string()))?;
        for i in 0..len {
            ax[i] += normal.sample(&mut rng);
            ay[i] += normal.sample(&mut rng);
            az[i] += normal.sample(&mut rng);
        }
    }

    let impact_start = n_rest + n_fall;
    let abs_impact: Vec<f64> = impact.iter().map(|v| v.abs()).collect();
    let (peak_offset, _) = peak_of(&abs_impact).expect("impact phase is non-empty");
    let truth = ImpactSegment::new(n_rest, impact_start, impact_start + peak_offset, len)?;
    let log = AccelLog::new(trial_id, altitude, fs, ax, ay, az)?;
    Ok((log, truth))
}

/// A log paired with its segmentation.
#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub log: AccelLog,
    pub segment: ImpactSegment,
}

/// Trials sharing one drop altitude.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialGroup {
    altitude: f64,
    trials: Vec<Trial>,
}

fn same_altitude(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(1.0)
}

impl TrialGroup {
    pub fn new(altitude: f64, trials: Vec<Trial>) -> Result<Self> {
        if trials.is_empty() {
            return Err(invalid(format!("trial group at {altitude} m is empty")));
        }
        if let Some(t) = trials
            .iter()
            .find(|t| !same_altitude(t.log.altitude, altitude))
        {
            return Err(invalid(format!(
                "trial {} at {} m does not belong to the {altitude} m group",
                t.log.trial_id, t.log.altitude
            )));
        }
        Ok(Self { altitude, trials })
    }

    pub fn altitude(&self) -> f64 {
        self.altitude
    }

    pub fn trials(&self) -> &[Trial] {
        &self.trials
    }
}

/// Buckets trials by altitude (to the micrometre), ascending.
pub fn group_by_altitude(trials: Vec<Trial>) -> Result<Vec<TrialGroup>> {
    let mut buckets: BTreeMap<i64, Vec<Trial>> = BTreeMap::new();
    for t in trials {
        buckets
            .entry((t.log.altitude * 1e6).round() as i64)
            .or_default()
            .push(t);
    }
    buckets
        .into_values()
        .map(|trials| {
            let altitude = trials[0].log.altitude;
            TrialGroup::new(altitude, trials)
        })
        .collect()
}
