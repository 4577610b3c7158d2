//! Where the impact energy goes.
//!
//! The kinetic energy at contact, ½·m·v0², is taken as the total. If the
//! payload never reaches the ground clearance, it splits into the spring
//! energy at maximum compression and the remainder, booked to the damper.
//! Otherwise the kinetic energy left when the clearance is used up is booked
//! as rigid collision, the spring holds ½·k·x_limit², and the damper takes
//! the rest. Work done by gravity during compression is not added to the
//! total.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::msd::{ImpactInit, ImpactSolution, ModelParams};

/// Travel available before the payload strikes the ground.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PayloadClearance {
    x_limit: f64,
}

impl PayloadClearance {
    pub fn new(x_limit: f64) -> Result<Self> {
        if !(x_limit.is_finite() && x_limit > 0.0) {
            return Err(invalid(format!("x_limit must be > 0, got {x_limit}")));
        }
        Ok(Self { x_limit })
    }

    pub fn x_limit(&self) -> f64 {
        self.x_limit
    }
}

impl Default for PayloadClearance {
    fn default() -> Self {
        Self { x_limit: 0.016 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyPartition {
    pub altitude: f64,
    pub total: f64,
    pub spring: f64,
    pub damper: f64,
    pub collision: f64,
    pub collided: bool,
    /// Compression at which the split is evaluated: the maximum, or the
    /// clearance when collided.
    pub displacement: f64,
}

impl EnergyPartition {
    pub fn frac_spring(&self) -> f64 {
        self.spring / self.total
    }

    pub fn frac_damper(&self) -> f64 {
        self.damper / self.total
    }

    pub fn frac_collision(&self) -> f64 {
        self.collision / self.total
    }

    /// Share absorbed by the frame (spring plus damper).
    pub fn frac_absorbed(&self) -> f64 {
        (self.spring + self.damper) / self.total
    }
}

pub fn partition(
    params: &ModelParams,
    altitude: f64,
    clearance: &PayloadClearance,
) -> Result<EnergyPartition> {
    if !(altitude.is_finite() && altitude > 0.0) {
        return Err(invalid(format!("altitude must be > 0, got {altitude}")));
    }
    let init = ImpactInit::from_altitude(params, altitude)?;
    let solution = ImpactSolution::new(params, &init);
    let total = 0.5 * params.mass() * init.v0 * init.v0;
    let limit = clearance.x_limit();
    let k = params.stiffness();

    let peak = solution.peak();
    if peak.displacement < limit {
        let spring = 0.5 * k * peak.displacement * peak.displacement;
        return Ok(EnergyPartition {
            altitude,
            total,
            spring,
            damper: total - spring,
            collision: 0.0,
            collided: false,
            displacement: peak.displacement,
        });
    }

    let t_hit = solution
        .first_crossing(limit)
        .expect("peak reaches the clearance, so the crossing exists");
    let (_, v) = solution.displacement_velocity(t_hit);
    let collision = 0.5 * params.mass() * v * v;
    let spring = 0.5 * k * limit * limit;
    Ok(EnergyPartition {
        altitude,
        total,
        spring,
        damper: total - collision - spring,
        collision,
        collided: true,
        displacement: limit,
    })
}

/// Partitions for an ascending list of altitudes.
pub fn extrapolate(
    params: &ModelParams,
    altitudes: &[f64],
    clearance: &PayloadClearance,
) -> Result<Vec<EnergyPartition>> {
    if altitudes.windows(2).any(|w| w[1] < w[0]) {
        return Err(invalid("altitudes must be sorted ascending"));
    }
    altitudes
        .iter()
        .map(|&h| partition(params, h, clearance))
        .collect()
}

/// Lowest altitude at which the payload reaches the clearance, found by
/// bisection on the maximum compression. `None` if even `max_altitude`
/// stays clear.
pub fn collision_onset(
    params: &ModelParams,
    clearance: &PayloadClearance,
    max_altitude: f64,
) -> Result<Option<f64>> {
    let reaches = |h: f64| -> Result<bool> {
        Ok(crate::msd::max_displacement(params, h)? >= clearance.x_limit())
    };
    if reaches(0.0)? {
        return Ok(Some(0.0));
    }
    if !reaches(max_altitude)? {
        return Ok(None);
    }
    let (mut lo, mut hi) = (0.0, max_altitude);
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if reaches(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}

pub const PARTITION_CSV_HEADER: &str = "altitude_cm,E_total_J,E_spring_J,E_damper_J,E_collision_J,frac_spring,frac_damper,frac_collision,collided";

/// Bar-chart ready CSV, one row per altitude.
pub fn partition_csv(rows: &[EnergyPartition]) -> String {
    let mut out = String::new();
    out.push_str(PARTITION_CSV_HEADER);
    out.push('\n');
    for p in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            p.altitude * 100.0,
            p.total,
            p.spring,
            p.damper,
            p.collision,
            p.frac_spring(),
            p.frac_damper(),
            p.frac_collision(),
            p.collided
        );
    }
    out
}
