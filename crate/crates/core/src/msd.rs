//! Gravity-forced mass-spring-damper impact model.
//!
//! The frame is reduced to a single mass `m` on a spring `k` and damper `c`.
//! `x` is the compression of the frame (positive toward the ground) and the
//! motion obeys
//!
//! ```text
//! m·x'' + c·x' + k·x = m·g
//! ```
//!
//! starting at the instant of ground contact. Solutions are evaluated in
//! closed form for each damping regime.

use serde::Serialize;

use crate::error::{invalid, Result};

/// Gravity used by the model unless overridden.
pub const DEFAULT_GRAVITY: f64 = 9.81;

/// Half-width of the band around ζ = 1 that is solved with the critical branch.
pub const CRITICAL_BAND: f64 = 1e-9;

/// Bisection stops once the bracket is narrower than this, in seconds.
pub const ROOT_TIME_TOL: f64 = 1e-9;

/// Physical constants of the lumped model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams {
    mass: f64,
    damping: f64,
    stiffness: f64,
    gravity: f64,
}

fn check_positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!(
            "{name} must be finite and > 0, got {value}"
        )))
    }
}

impl ModelParams {
    /// Parameters with the default gravity of 9.81 m/s².
    pub fn new(mass: f64, damping: f64, stiffness: f64) -> Result<Self> {
        Self::with_gravity(mass, damping, stiffness, DEFAULT_GRAVITY)
    }

    pub fn with_gravity(mass: f64, damping: f64, stiffness: f64, gravity: f64) -> Result<Self> {
        check_positive("mass", mass)?;
        check_positive("damping", damping)?;
        check_positive("stiffness", stiffness)?;
        check_positive("gravity", gravity)?;
        Ok(Self {
            mass,
            damping,
            stiffness,
            gravity,
        })
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn damping(&self) -> f64 {
        self.damping
    }

    pub fn stiffness(&self) -> f64 {
        self.stiffness
    }

    pub fn gravity(&self) -> f64 {
        self.gravity
    }

    /// Copy with a different damping coefficient.
    pub fn set_damping(&self, damping: f64) -> Result<Self> {
        Self::with_gravity(self.mass, damping, self.stiffness, self.gravity)
    }

    /// Copy with a different stiffness.
    pub fn set_stiffness(&self, stiffness: f64) -> Result<Self> {
        Self::with_gravity(self.mass, self.damping, stiffness, self.gravity)
    }

    /// ζ = c / (2·√(k·m)).
    pub fn damping_ratio(&self) -> f64 {
        self.damping / (2.0 * (self.stiffness * self.mass).sqrt())
    }

    /// ωn = √(k/m) in rad/s.
    pub fn natural_frequency(&self) -> f64 {
        (self.stiffness / self.mass).sqrt()
    }

    /// Static equilibrium compression m·g/k.
    pub fn static_sag(&self) -> f64 {
        self.mass * self.gravity / self.stiffness
    }

    /// Specific force transmitted through the frame, (c·v + k·x)/m.
    ///
    /// This is what an accelerometer on the payload reads: it equals g at
    /// static equilibrium and g − x''.
    pub fn sensor_reading(&self, x: f64, v: f64) -> f64 {
        (self.damping * v + self.stiffness * x) / self.mass
    }

    /// Weight m·g in newtons.
    pub fn weight(&self) -> f64 {
        self.mass * self.gravity
    }
}

/// Conditions at the instant of ground contact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ImpactInit {
    pub x0: f64,
    pub v0: f64,
    /// Drop altitude the velocity was derived from, when known.
    pub altitude: Option<f64>,
}

impl ImpactInit {
    pub fn new(x0: f64, v0: f64) -> Result<Self> {
        if !(x0.is_finite() && x0 >= 0.0) {
            return Err(invalid(format!("x0 must be finite and >= 0, got {x0}")));
        }
        if !(v0.is_finite() && v0 >= 0.0) {
            return Err(invalid(format!("v0 must be finite and >= 0, got {v0}")));
        }
        Ok(Self {
            x0,
            v0,
            altitude: None,
        })
    }

    /// Free fall from rest without drag: x0 = 0, v0 = √(2·g·h).
    pub fn from_altitude(params: &ModelParams, altitude: f64) -> Result<Self> {
        if !(altitude.is_finite() && altitude >= 0.0) {
            return Err(invalid(format!(
                "altitude must be finite and >= 0, got {altitude}"
            )));
        }
        Ok(Self {
            x0: 0.0,
            v0: (2.0 * params.gravity * altitude).sqrt(),
            altitude: Some(altitude),
        })
    }
}

/// Convenience wrapper for [`ImpactInit::from_altitude`].
pub fn init_from_altitude(params: &ModelParams, altitude: f64) -> Result<ImpactInit> {
    ImpactInit::from_altitude(params, altitude)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ImpactState {
    pub t: f64,
    pub x: f64,
    pub v: f64,
    pub a: f64,
}

#[derive(Debug, Clone, Copy)]
enum Regime {
    Under { alpha: f64, omega_d: f64 },
    Critical { omega: f64 },
    // `slow` is the root closer to zero, -α + β, computed without cancellation.
    Over { alpha: f64, beta: f64, slow: f64 },
}

/// Closed-form trajectory for one set of parameters and initial conditions.
///
/// Internally the deviation from static equilibrium `y = x - m·g/k` is a
/// free damped oscillator, which is what the three regimes solve.
#[derive(Debug, Clone, Copy)]
pub struct ImpactSolution {
    params: ModelParams,
    init: ImpactInit,
    sag: f64,
    y0: f64,
    regime: Regime,
}

impl ImpactSolution {
    pub fn new(params: &ModelParams, init: &ImpactInit) -> Self {
        let zeta = params.damping_ratio();
        let omega = params.natural_frequency();
        let regime = if (zeta - 1.0).abs() < CRITICAL_BAND {
            Regime::Critical { omega }
        } else if zeta < 1.0 {
            Regime::Under {
                alpha: zeta * omega,
                omega_d: omega * (1.0 - zeta * zeta).sqrt(),
            }
        } else {
            let root = (zeta * zeta - 1.0).sqrt();
            Regime::Over {
                alpha: zeta * omega,
                beta: omega * root,
                slow: -omega / (zeta + root),
            }
        };
        let sag = params.static_sag();
        Self {
            params: *params,
            init: *init,
            sag,
            y0: init.x0 - sag,
            regime,
        }
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn init(&self) -> &ImpactInit {
        &self.init
    }

    /// Displacement and velocity at time `t` after contact.
    pub fn displacement_velocity(&self, t: f64) -> (f64, f64) {
        let y0 = self.y0;
        let v0 = self.init.v0;
        let (y, v) = match self.regime {
            Regime::Under { alpha, omega_d } => {
                let b = (v0 + alpha * y0) / omega_d;
                let (sin, cos) = (omega_d * t).sin_cos();
                let decay = (-alpha * t).exp();
                let y = decay * (y0 * cos + b * sin);
                let v =
                    decay * ((b * omega_d - alpha * y0) * cos - (y0 * omega_d + alpha * b) * sin);
                (y, v)
            }
            Regime::Critical { omega } => {
                let d = v0 + omega * y0;
                let decay = (-omega * t).exp();
                let y = (y0 + d * t) * decay;
                let v = decay * (d - omega * (y0 + d * t));
                (y, v)
            }
            Regime::Over { alpha, beta, slow } => {
                let d = v0 + alpha * y0;
                let fast = (-2.0 * beta * t).exp();
                let spread = -(-2.0 * beta * t).exp_m1() / (2.0 * beta);
                let lead = (slow * t).exp();
                let y = lead * (y0 * 0.5 * (1.0 + fast) + d * spread);
                let v = slow * y + lead * fast * (d - beta * y0);
                (y, v)
            }
        };
        (self.sag + y, v)
    }

    pub fn state(&self, t: f64) -> ImpactState {
        let (x, v) = self.displacement_velocity(t);
        ImpactState {
            t,
            x,
            v,
            a: self.params.gravity - self.params.sensor_reading(x, v),
        }
    }

    /// Time span beyond which the transient is negligible, used to bound
    /// searches over the trajectory.
    fn horizon(&self) -> f64 {
        match self.regime {
            Regime::Under { alpha, omega_d } => {
                let period = std::f64::consts::TAU / omega_d;
                (2.5 * period).min(60.0 / alpha)
            }
            Regime::Critical { omega } => 60.0 / omega,
            Regime::Over { slow, .. } => 60.0 / slow.abs(),
        }
    }

    /// Global maximum of `x(t)` over `t ≥ 0`.
    pub fn peak(&self) -> Peak {
        const STEPS: usize = 4000;
        let horizon = self.horizon();
        let step = horizon / STEPS as f64;

        let mut best = Peak {
            time: Some(0.0),
            displacement: self.init.x0,
        };
        let mut prev_t = 0.0;
        let mut prev_v = self.init.v0;
        for i in 1..=STEPS {
            let t = i as f64 * step;
            let (_, v) = self.displacement_velocity(t);
            if prev_v > 0.0 && v <= 0.0 {
                let root = self.velocity_root(prev_t, t);
                let (x, _) = self.displacement_velocity(root);
                if x > best.displacement {
                    best = Peak {
                        time: Some(root),
                        displacement: x,
                    };
                }
            }
            prev_t = t;
            prev_v = v;
        }
        if self.sag > best.displacement {
            // Creeps up to equilibrium without ever turning around.
            best = Peak {
                time: None,
                displacement: self.sag,
            };
        }
        best
    }

    fn velocity_root(&self, mut lo: f64, mut hi: f64) -> f64 {
        while hi - lo > ROOT_TIME_TOL {
            let mid = 0.5 * (lo + hi);
            if self.displacement_velocity(mid).1 > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// First time the compression reaches `level`, if it ever does.
    pub fn first_crossing(&self, level: f64) -> Option<f64> {
        if self.init.x0 >= level {
            return Some(0.0);
        }
        let peak = self.peak();
        if peak.displacement < level {
            return None;
        }
        let mut hi = match peak.time {
            Some(t) => t,
            None => {
                // Asymptotic approach: walk out until the level is passed.
                let mut t = self.horizon() / 4000.0;
                while self.displacement_velocity(t).0 < level {
                    t *= 2.0;
                    if !t.is_finite() {
                        return None;
                    }
                }
                t
            }
        };
        let mut lo = 0.0;
        while hi - lo > ROOT_TIME_TOL {
            let mid = 0.5 * (lo + hi);
            if self.displacement_velocity(mid).0 < level {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(hi)
    }
}

/// Location of the maximum compression.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Peak {
    /// `None` when the supremum is only approached as t → ∞.
    pub time: Option<f64>,
    pub displacement: f64,
}

pub fn closed_form_state(params: &ModelParams, init: &ImpactInit, t: f64) -> Result<ImpactState> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(invalid(format!("t must be finite and >= 0, got {t}")));
    }
    Ok(ImpactSolution::new(params, init).state(t))
}

/// Maximum compression after a drop from `altitude`.
pub fn max_displacement(params: &ModelParams, altitude: f64) -> Result<f64> {
    let init = ImpactInit::from_altitude(params, altitude)?;
    Ok(ImpactSolution::new(params, &init).peak().displacement)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Truncation {
    TimeLimit,
    DisplacementLimit,
    Rebound,
}

impl std::fmt::Display for Truncation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Truncation::TimeLimit => "time-limit",
            Truncation::DisplacementLimit => "displacement-limit",
            Truncation::Rebound => "rebound",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationOptions {
    pub dt: f64,
    pub t_max: f64,
    /// Stop at the first sample with `x >= x_limit`.
    pub x_limit: Option<f64>,
    /// Stop at the first sample where the frame springs back (`v < 0`).
    pub stop_on_rebound: bool,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        Self {
            dt: 1e-4,
            t_max: 0.1,
            x_limit: None,
            stop_on_rebound: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceSample {
    #[serde(flatten)]
    pub state: ImpactState,
    /// Predicted accelerometer magnitude (c·v + k·x)/m.
    pub sensor: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImpactTrace {
    pub dt: f64,
    pub samples: Vec<TraceSample>,
    pub truncation: Truncation,
}

impl ImpactTrace {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sensor(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.sensor).collect()
    }

    pub fn max_displacement(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.state.x)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Samples the closed-form solution on a uniform grid.
pub fn simulate(
    params: &ModelParams,
    init: &ImpactInit,
    options: &SimulationOptions,
) -> Result<ImpactTrace> {
    let SimulationOptions {
        dt,
        t_max,
        x_limit,
        stop_on_rebound,
    } = *options;
    check_positive("dt", dt)?;
    check_positive("t_max", t_max)?;
    if t_max <= dt {
        return Err(invalid(format!("t_max ({t_max}) must exceed dt ({dt})")));
    }
    if let Some(limit) = x_limit {
        check_positive("x_limit", limit)?;
    }

    let solution = ImpactSolution::new(params, init);
    let last = (t_max / dt + 1e-9).floor() as usize;
    let mut samples = Vec::with_capacity(last + 1);
    let mut truncation = Truncation::TimeLimit;
    for i in 0..=last {
        let state = solution.state(i as f64 * dt);
        samples.push(TraceSample {
            state,
            sensor: params.sensor_reading(state.x, state.v),
        });
        if x_limit.is_some_and(|limit| state.x >= limit) {
            truncation = Truncation::DisplacementLimit;
            break;
        }
        if stop_on_rebound && state.v < 0.0 {
            truncation = Truncation::Rebound;
            break;
        }
    }
    Ok(ImpactTrace {
        dt,
        samples,
        truncation,
    })
}
