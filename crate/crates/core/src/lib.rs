//! Lumped mass-spring-damper models of drone frames hitting the ground.
//!
//! The crate covers the whole chain from a drop altitude to numbers one can
//! compare with a logger: exact impact trajectories ([`msd`]), the sensor's
//! latency filter ([`signal`]), trial logs and their segmentation
//! ([`ingest`]), parameter fitting ([`estimate`]) and the energy budget of
//! an impact ([`energy`]).

pub mod energy;
pub mod error;
pub mod estimate;
pub mod ingest;
pub mod msd;
pub mod prediction;
pub mod signal;

pub use energy::{extrapolate, partition, EnergyPartition, PayloadClearance};
pub use error::{Error, Result, SegmentPhase};
pub use estimate::{
    fit_damping, fit_stiffness, loss_surface, nelder_mead, trial_loss, weighted_loss, FitResult,
    LossSurface, NelderMeadOptions, StaticMeasurement, StiffnessFit, StiffnessMode,
};
pub use ingest::{
    generate_synthetic_log, parse_log, segment_impact, write_log, AccelLog, ImpactSegment,
    SegmentConfig, SynthConfig, Trial, TrialGroup, Units,
};
pub use msd::{
    closed_form_state, init_from_altitude, max_displacement, simulate, ImpactInit, ImpactSolution,
    ImpactState, ImpactTrace, ModelParams, SimulationOptions, Truncation,
};
pub use signal::{
    absolute_acceleration, apply_filter, design_lowpass, peak, FilterCoeffs, FilterSpec, Series,
};
