//! Effective run configuration: defaults, then a flat `key = value` file,
//! then command-line flags.

use std::fmt::Write as _;
use std::path::Path;

use crashfit_core::{FilterSpec, ModelParams, PayloadClearance, SegmentConfig};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mass: f64,
    pub damping: f64,
    pub stiffness: f64,
    pub gravity: f64,
    pub cutoff_hz: f64,
    pub sample_rate_hz: f64,
    pub log_rate_hz: f64,
    pub x_limit_mm: f64,
    pub ff_threshold: f64,
    pub ff_min_duration: f64,
    pub impact_threshold: f64,
    pub peak_window: f64,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let seg = SegmentConfig::default();
        Self {
            mass: 0.241,
            damping: 46.0,
            stiffness: 7040.0,
            gravity: crashfit_core::msd::DEFAULT_GRAVITY,
            cutoff_hz: 500.0,
            sample_rate_hz: 10_000.0,
            log_rate_hz: 1000.0,
            x_limit_mm: 16.0,
            ff_threshold: seg.ff_threshold,
            ff_min_duration: seg.ff_min_duration,
            impact_threshold: seg.impact_threshold,
            peak_window: seg.peak_window,
            seed: 0,
        }
    }
}

/// Values given on the command line; `None` leaves the file/default value.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub mass: Option<f64>,
    pub damping: Option<f64>,
    pub stiffness: Option<f64>,
    pub gravity: Option<f64>,
    pub cutoff_hz: Option<f64>,
    pub sample_rate_hz: Option<f64>,
    pub log_rate_hz: Option<f64>,
    pub x_limit_mm: Option<f64>,
    pub ff_threshold: Option<f64>,
    pub ff_min_duration: Option<f64>,
    pub impact_threshold: Option<f64>,
    pub peak_window: Option<f64>,
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Self, CliError> {
        let mut config = Self::default();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::Usage(format!("cannot read config {}: {e}", path.display()))
            })?;
            config
                .apply_file(&text)
                .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
        }
        config.apply_overrides(overrides);
        config.validate()?;
        Ok(config)
    }

    fn apply_file(&mut self, text: &str) -> Result<(), String> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key = value", i + 1))?;
            let (key, value) = (key.trim(), value.trim());
            let num = || {
                value
                    .parse::<f64>()
                    .map_err(|_| format!("line {}: {key}: '{value}' is not a number", i + 1))
            };
            match key {
                "mass" => self.mass = num()?,
                "damping" => self.damping = num()?,
                "stiffness" => self.stiffness = num()?,
                "gravity" => self.gravity = num()?,
                "cutoff_hz" => self.cutoff_hz = num()?,
                "sample_rate_hz" => self.sample_rate_hz = num()?,
                "log_rate_hz" => self.log_rate_hz = num()?,
                "x_limit_mm" => self.x_limit_mm = num()?,
                "ff_threshold" => self.ff_threshold = num()?,
                "ff_min_duration" => self.ff_min_duration = num()?,
                "impact_threshold" => self.impact_threshold = num()?,
                "peak_window" => self.peak_window = num()?,
                "seed" => {
                    self.seed = value
                        .parse()
                        .map_err(|_| format!("line {}: seed: '{value}' is not an integer", i + 1))?
                }
                other => return Err(format!("line {}: unknown key '{other}'", i + 1)),
            }
        }
        Ok(())
    }

    fn apply_overrides(&mut self, o: &Overrides) {
        macro_rules! take {
            ($($field:ident),*) => {
                $(if let Some(v) = o.$field { self.$field = v; })*
            };
        }
        take!(
            mass,
            damping,
            stiffness,
            gravity,
            cutoff_hz,
            sample_rate_hz,
            log_rate_hz,
            x_limit_mm,
            ff_threshold,
            ff_min_duration,
            impact_threshold,
            peak_window,
            seed
        );
    }

    fn validate(&self) -> Result<(), CliError> {
        let usage = |e: crashfit_core::Error| CliError::Usage(e.to_string());
        self.params().map_err(usage)?;
        self.filter().map_err(usage)?;
        self.clearance().map_err(usage)?;
        self.segmentation().validate().map_err(usage)?;
        if !(self.log_rate_hz.is_finite() && self.log_rate_hz > 0.0) {
            return Err(CliError::Usage(format!(
                "log_rate_hz must be > 0, got {}",
                self.log_rate_hz
            )));
        }
        Ok(())
    }

    pub fn params(&self) -> crashfit_core::Result<ModelParams> {
        ModelParams::with_gravity(self.mass, self.damping, self.stiffness, self.gravity)
    }

    pub fn filter(&self) -> crashfit_core::Result<FilterSpec> {
        FilterSpec::new(self.cutoff_hz, self.sample_rate_hz)
    }

    pub fn clearance(&self) -> crashfit_core::Result<PayloadClearance> {
        PayloadClearance::new(self.x_limit_mm / 1000.0)
    }

    pub fn segmentation(&self) -> SegmentConfig {
        SegmentConfig {
            ff_threshold: self.ff_threshold,
            ff_min_duration: self.ff_min_duration,
            impact_threshold: self.impact_threshold,
            peak_window: self.peak_window,
        }
    }

    /// Space separated `key=value` pairs, in config-file key names.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = write!(
            s,
            "mass={} damping={} stiffness={} gravity={} cutoff_hz={} sample_rate_hz={} \
             log_rate_hz={} x_limit_mm={} ff_threshold={} ff_min_duration={} \
             impact_threshold={} peak_window={} seed={}",
            self.mass,
            self.damping,
            self.stiffness,
            self.gravity,
            self.cutoff_hz,
            self.sample_rate_hz,
            self.log_rate_hz,
            self.x_limit_mm,
            self.ff_threshold,
            self.ff_min_duration,
            self.impact_threshold,
            self.peak_window,
            self.seed
        );
        s
    }

    /// Provenance line written at the top of every output file.
    pub fn header(&self, command: &str) -> String {
        format!(
            "# generated-by crashfit {} {command} {}",
            env!("CARGO_PKG_VERSION"),
            self.summary()
        )
    }
}
