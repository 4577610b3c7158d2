//! Shared fixtures for the benchmarks.

use crashfit_core::ingest::group_by_altitude;
use crashfit_core::{
    generate_synthetic_log, FilterSpec, ModelParams, SynthConfig, Trial, TrialGroup,
};

pub fn params() -> ModelParams {
    ModelParams::new(0.241, 46.0, 7040.0).unwrap()
}

pub fn filter() -> FilterSpec {
    FilterSpec::new(500.0, 10_000.0).unwrap()
}

/// `per_altitude` noisy trials at 50, 100 and 150 cm.
pub fn dataset(per_altitude: usize) -> Vec<TrialGroup> {
    let mut trials = Vec::new();
    for (a, h) in [0.5, 1.0, 1.5].into_iter().enumerate() {
        for n in 0..per_altitude {
            let cfg = SynthConfig {
                noise_sigma: 0.5,
                seed: (a * per_altitude + n) as u64,
                ..Default::default()
            };
            let (log, segment) =
                generate_synthetic_log(&params(), h, &filter(), &cfg, format!("b{a}_{n}")).unwrap();
            trials.push(Trial { log, segment });
        }
    }
    group_by_altitude(trials).unwrap()
}
