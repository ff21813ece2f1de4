use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::AssignError;
use crate::routes::RouteSet;
use crate::simulate::{average_travel_times, run_simulation, RouteMean, SimulationConfig};

/// Produces per-route mean travel times for a probability vector.
pub trait Evaluator: Sync {
    fn n_routes(&self) -> usize;

    /// `iteration` is 1-based; evaluators that draw random numbers derive their seed
    /// from `seed` and `iteration`.
    fn evaluate(&self, probabilities: &[f64], demand: f64, seed: u64, iteration: usize)
        -> Result<Vec<RouteMean>, AssignError>;
}

/// Seed of one iteration's simulation: a separate ChaCha stream per iteration.
pub fn iteration_seed(seed: u64, iteration: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(iteration as u64);
    rng.next_u64()
}

/// Runs one simulation per evaluation and averages arrivals in the window.
pub struct SimulationEvaluator<'a> {
    pub routes: &'a RouteSet,
    /// `demand` and `seed` are overwritten per evaluation.
    pub config: SimulationConfig,
}

impl Evaluator for SimulationEvaluator<'_> {
    fn n_routes(&self) -> usize {
        self.routes.len()
    }

    fn evaluate(&self, probabilities: &[f64], demand: f64, seed: u64, iteration: usize) -> Result<Vec<RouteMean>, AssignError> {
        let config = SimulationConfig {
            demand,
            seed: iteration_seed(seed, iteration),
            ..self.config.clone()
        };
        let out = run_simulation(self.routes, &config, probabilities)?;
        Ok(average_travel_times(&out.records, config.measurement_window, self.routes.len()))
    }
}

/// `t(x) = free + slope·x` with `x` the route's flow (ped/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffineLatency {
    pub free: f64,
    pub slope: f64,
}

/// Latency file for the analytic evaluator.
///
/// ```toml
/// [[routes]]
/// free = 60.0
/// slope = 40.0
///
/// [[routes]]
/// free = 70.0
/// slope = 20.0
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatencySpec {
    pub routes: Vec<AffineLatency>,
}

/// Noise-free travel times from affine latencies, for checking the equilibrium
/// logic without the simulator.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticEvaluator {
    latencies: Vec<AffineLatency>,
}

impl AnalyticEvaluator {
    /// Every route needs `free > 0` and `slope >= 0`.
    pub fn new(latencies: Vec<AffineLatency>) -> Result<Self, AssignError> {
        if latencies.is_empty() {
            return Err(AssignError::Params("at least one latency function is required".into()));
        }
        if let Some(k) = latencies.iter().position(|l| !(l.free > 0.0 && l.slope >= 0.0 && l.slope.is_finite())) {
            return Err(AssignError::Params(format!(
                "route {}: latency needs free > 0 and slope >= 0",
                k + 1
            )));
        }
        Ok(Self { latencies })
    }

    pub fn from_spec(spec: LatencySpec) -> Result<Self, AssignError> {
        Self::new(spec.routes)
    }

    pub fn latencies(&self) -> &[AffineLatency] {
        &self.latencies
    }
}

impl Evaluator for AnalyticEvaluator {
    fn n_routes(&self) -> usize {
        self.latencies.len()
    }

    fn evaluate(&self, probabilities: &[f64], demand: f64, _seed: u64, _iteration: usize) -> Result<Vec<RouteMean>, AssignError> {
        Ok(self
            .latencies
            .iter()
            .zip(probabilities)
            .map(|(l, &p)| RouteMean {
                mean: Some(l.free + l.slope * p * demand),
                count: usize::MAX,
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iteration_seeds_differ_and_repeat() {
        assert_eq!(iteration_seed(7, 3), iteration_seed(7, 3));
        assert_ne!(iteration_seed(7, 3), iteration_seed(7, 4));
        assert_ne!(iteration_seed(7, 3), iteration_seed(8, 3));
    }

    #[test]
    fn affine_latencies() {
        let e = AnalyticEvaluator::new(vec![
            AffineLatency { free: 60.0, slope: 40.0 },
            AffineLatency { free: 70.0, slope: 20.0 },
        ])
        .unwrap();
        let t = e.evaluate(&[0.5, 0.5], 2.0, 0, 1).unwrap();
        assert_eq!(t[0].mean, Some(100.0));
        assert_eq!(t[1].mean, Some(90.0));
        assert!(AnalyticEvaluator::new(vec![AffineLatency { free: 0.0, slope: 1.0 }]).is_err());
    }

    #[test]
    fn latency_file_parses() {
        let spec: LatencySpec = toml::from_str("[[routes]]\nfree = 60.0\nslope = 40.0\n").unwrap();
        assert_eq!(spec.routes.len(), 1);
    }
}
