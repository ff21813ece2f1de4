use rand::Rng;
use serde::{Deserialize, Serialize};

use super::force::ForceParameters;
use super::SimError;

/// Population distribution of desired walking speeds (m/s).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpeedDistribution {
    /// Uniform per sex, mixed by `female_share`.
    MixedUniform {
        female: [f64; 2],
        male: [f64; 2],
        female_share: f64,
    },
    Uniform {
        min: f64,
        max: f64,
    },
    Constant {
        speed: f64,
    },
}

impl Default for SpeedDistribution {
    /// Adults aged 30 to 50, equal shares of women and men.
    fn default() -> Self {
        SpeedDistribution::MixedUniform {
            female: [0.71, 1.19],
            male: [0.97, 1.62],
            female_share: 0.5,
        }
    }
}

impl SpeedDistribution {
    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        match *self {
            SpeedDistribution::MixedUniform {
                female,
                male,
                female_share,
            } => {
                let band = if rng.random::<f64>() < female_share { female } else { male };
                rng.random_range(band[0]..=band[1])
            }
            SpeedDistribution::Uniform { min, max } => rng.random_range(min..=max),
            SpeedDistribution::Constant { speed } => speed,
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            SpeedDistribution::MixedUniform {
                female,
                male,
                female_share,
            } => {
                female_share * 0.5 * (female[0] + female[1]) + (1.0 - female_share) * 0.5 * (male[0] + male[1])
            }
            SpeedDistribution::Uniform { min, max } => 0.5 * (min + max),
            SpeedDistribution::Constant { speed } => speed,
        }
    }

    fn validate(&self) -> Result<(), SimError> {
        let band_ok = |lo: f64, hi: f64| lo > 0.0 && lo <= hi && hi <= 3.0;
        let ok = match *self {
            SpeedDistribution::MixedUniform {
                female,
                male,
                female_share,
            } => band_ok(female[0], female[1]) && band_ok(male[0], male[1]) && (0.0..=1.0).contains(&female_share),
            SpeedDistribution::Uniform { min, max } => band_ok(min, max),
            SpeedDistribution::Constant { speed } => band_ok(speed, speed),
        };
        if ok {
            Ok(())
        } else {
            Err(SimError::Config("desired speeds must lie in (0, 3] m/s".into()))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    /// Pedestrians per second.
    pub demand: f64,
    /// Simulated time (s).
    pub duration: f64,
    pub time_step: f64,
    /// Arrivals in `[start, end]` count toward the travel-time means.
    pub measurement_window: [f64; 2],
    pub speed_distribution: SpeedDistribution,
    pub force_parameters: ForceParameters,
    pub seed: u64,
    /// Placement tries per spawn before deferring to the next step.
    pub spawn_attempts: u32,
    /// Record positions every this many seconds; off when absent.
    pub trajectory_interval: Option<f64>,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            demand: 1.0,
            duration: 600.0,
            time_step: 0.05,
            measurement_window: [300.0, 600.0],
            speed_distribution: SpeedDistribution::default(),
            force_parameters: ForceParameters::default(),
            seed: 1,
            spawn_attempts: 30,
            trajectory_interval: None,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::Config(m.to_string()));
        if !(self.demand > 0.0 && self.demand.is_finite()) {
            return bad("demand must be positive");
        }
        if !(self.time_step > 0.0 && self.time_step <= 0.1) {
            return bad("time_step must lie in (0, 0.1] s");
        }
        let [t0, t1] = self.measurement_window;
        if !(t0 < t1 && t1 <= self.duration) {
            return bad("measurement window must satisfy start < end <= duration");
        }
        let f = &self.force_parameters;
        if !(f.relaxation_time > 0.0 && f.radius > 0.0 && f.pedestrian_range > 0.0 && f.wall_range > 0.0) {
            return bad("force parameters must be positive");
        }
        if self.trajectory_interval.is_some_and(|dt| !(dt > 0.0)) {
            return bad("trajectory_interval must be positive");
        }
        self.speed_distribution.validate()
    }
}
