//! Iterative travel-time user equilibrium over route-choice probabilities.
//!
//! Each iteration evaluates mean travel times for the current probabilities, then
//! moves probability mass `Δp = α·((t_max − t_min)/(t_max + t_min))^δ` from the
//! slowest to the fastest route. δ adapts: it shrinks while the same pair of routes
//! stays slowest and fastest, and grows when the two swap roles.

mod evaluator;
mod output;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use evaluator::{iteration_seed, AffineLatency, AnalyticEvaluator, Evaluator, LatencySpec, SimulationEvaluator};
pub use output::{read_history_csv, read_summary_csv, write_history_csv, write_summary_csv, HistoryRow, SummaryRow};

use crate::simulate::{RouteMean, SimError};

#[derive(Debug, Error)]
pub enum AssignError {
    #[error("invalid assignment parameters: {0}")]
    Params(String),
    #[error("travel times must be positive (t_min = {0})")]
    NonPositiveTime(f64),
    #[error("evaluator returned {got} route(s), expected {expected}")]
    RouteCount { expected: usize, got: usize },
    #[error(transparent)]
    Simulation(#[from] SimError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AssignmentParams {
    /// Sensitivity of the probability shift.
    pub alpha: f64,
    /// Initial exponent of the probability shift.
    pub delta: f64,
    pub delta_bounds: [f64; 2],
    /// Applied to δ when slowest and fastest routes swap.
    pub delta_up_factor: f64,
    /// Applied to δ when slowest and fastest routes repeat.
    pub delta_down_factor: f64,
    /// Largest accepted spread between route means (s).
    pub termination_threshold: f64,
    /// Routes with fewer arrivals in the window are not compared.
    pub min_samples: usize,
    pub max_iterations: usize,
    /// Floor for every route probability after an update. Off when absent, so
    /// routes driven to zero stay there.
    pub reseed_epsilon: Option<f64>,
}

impl Default for AssignmentParams {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            delta: 1.0,
            delta_bounds: [0.25, 4.0],
            delta_up_factor: 1.5,
            delta_down_factor: 2.0 / 3.0,
            termination_threshold: 0.5,
            min_samples: 10,
            max_iterations: 100,
            reseed_epsilon: None,
        }
    }
}

impl AssignmentParams {
    pub fn validate(&self) -> Result<(), AssignError> {
        let bad = |m: &str| Err(AssignError::Params(m.to_string()));
        let [lo, hi] = self.delta_bounds;
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad("alpha must be positive");
        }
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return bad("delta_bounds must satisfy 0 < min <= max");
        }
        if !(self.delta >= lo && self.delta <= hi) {
            return bad("delta must lie within delta_bounds");
        }
        if !(self.delta_up_factor >= 1.0 && self.delta_down_factor > 0.0 && self.delta_down_factor <= 1.0) {
            return bad("delta_up_factor must be >= 1 and delta_down_factor in (0, 1]");
        }
        if !(self.termination_threshold >= 0.0) {
            return bad("termination_threshold must be non-negative");
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be at least 1");
        }
        if self.reseed_epsilon.is_some_and(|e| !(e > 0.0 && e < 0.5)) {
            return bad("reseed_epsilon must lie in (0, 0.5)");
        }
        Ok(())
    }
}

/// `α·((t_max − t_min)/(t_max + t_min))^δ`.
pub fn probability_shift(t_max: f64, t_min: f64, alpha: f64, delta: f64) -> Result<f64, AssignError> {
    if !(t_min > 0.0) {
        return Err(AssignError::NonPositiveTime(t_min));
    }
    if !(t_max >= t_min) {
        return Err(AssignError::Params(format!("t_max {t_max} is below t_min {t_min}")));
    }
    if t_max == t_min {
        return Ok(0.0);
    }
    Ok(alpha * ((t_max - t_min) / (t_max + t_min)).powf(delta))
}

/// Slowest and fastest among the comparable routes (0-based indices).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extremes {
    pub slowest: usize,
    pub fastest: usize,
    pub t_max: f64,
    pub t_min: f64,
}

impl Extremes {
    pub fn spread(&self) -> f64 {
        self.t_max - self.t_min
    }
}

/// Routes with positive probability and at least `min_samples` arrivals.
pub fn eligible(probabilities: &[f64], stats: &[RouteMean], min_samples: usize) -> Vec<usize> {
    (0..probabilities.len())
        .filter(|&k| probabilities[k] > 0.0 && stats[k].count >= min_samples && stats[k].mean.is_some())
        .collect()
}

/// Ties go to the lowest route id.
pub fn extremes(probabilities: &[f64], stats: &[RouteMean], min_samples: usize) -> Option<Extremes> {
    let routes = eligible(probabilities, stats, min_samples);
    let mean = |k: usize| stats[k].mean.unwrap();
    let first = *routes.first()?;
    let mut e = Extremes {
        slowest: first,
        fastest: first,
        t_max: mean(first),
        t_min: mean(first),
    };
    for &k in &routes[1..] {
        if mean(k) > e.t_max {
            e.slowest = k;
            e.t_max = mean(k);
        }
        if mean(k) < e.t_min {
            e.fastest = k;
            e.t_min = mean(k);
        }
    }
    Some(e)
}

/// Moves up to `dp` from the slowest to the fastest comparable route. Fewer than two
/// comparable routes leave the vector unchanged.
pub fn update_ratios(current: &[f64], stats: &[RouteMean], min_samples: usize, dp: f64) -> Vec<f64> {
    let mut next = current.to_vec();
    if eligible(current, stats, min_samples).len() < 2 {
        log::warn!("fewer than two routes with enough arrivals; probabilities unchanged");
        return next;
    }
    let e = extremes(current, stats, min_samples).unwrap();
    if e.slowest == e.fastest {
        return next;
    }
    let moved = dp.min(next[e.slowest]);
    next[e.slowest] -= moved;
    next[e.fastest] += moved;
    next
}

/// New δ given the (slowest, fastest) pairs of the previous and current iterations.
pub fn adapt_delta(previous: Option<(usize, usize)>, current: (usize, usize), delta: f64, params: &AssignmentParams) -> f64 {
    let [lo, hi] = params.delta_bounds;
    match previous {
        Some(p) if p == current => (delta * params.delta_down_factor).max(lo),
        Some((max, min)) if (min, max) == current => (delta * params.delta_up_factor).min(hi),
        _ => delta,
    }
}

/// True iff the spread of `means` is within `threshold`; an empty or single-route
/// list has spread 0.
pub fn check_termination(means: &[f64], threshold: f64) -> bool {
    let max = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = means.iter().copied().fold(f64::INFINITY, f64::min);
    means.len() < 2 || max - min <= threshold
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationResult {
    /// 1-based.
    pub iteration: usize,
    pub probabilities: Vec<f64>,
    pub stats: Vec<RouteMean>,
    /// `None` when no route had enough arrivals to compare.
    pub extremes: Option<Extremes>,
    /// δ used for this iteration's shift.
    pub delta: f64,
    /// Shift applied after this iteration (0 on the last).
    pub dp: f64,
}

impl IterationResult {
    /// `t_max − t_min` over comparable routes; infinite when there are none.
    pub fn spread(&self) -> f64 {
        self.extremes.map_or(f64::INFINITY, |e| e.spread())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentResult {
    pub history: Vec<IterationResult>,
    pub terminated: bool,
    /// Index into `history`.
    pub selected: usize,
    pub termination_threshold: f64,
}

impl AssignmentResult {
    pub fn selected_iteration(&self) -> &IterationResult {
        &self.history[self.selected]
    }

    fn from_history(history: Vec<IterationResult>, terminated: bool, threshold: f64) -> Self {
        let selected = if terminated {
            history.len() - 1
        } else {
            let mut best = 0;
            for (k, it) in history.iter().enumerate() {
                if it.spread() < history[best].spread() {
                    best = k;
                }
            }
            best
        };
        Self {
            history,
            terminated,
            selected,
            termination_threshold: threshold,
        }
    }
}

/// A run that stopped on an evaluator error, with the iterations completed before it.
#[derive(Debug, Error)]
#[error("assignment failed after {} iteration(s): {source}", history.len())]
pub struct RunFailure {
    pub history: Vec<IterationResult>,
    #[source]
    pub source: AssignError,
}

/// Runs the loop from uniform probabilities until the spread is within the threshold
/// or `max_iterations` evaluations have been made.
pub fn run_assignment(
    evaluator: &dyn Evaluator,
    demand: f64,
    seed: u64,
    params: &AssignmentParams,
) -> Result<AssignmentResult, RunFailure> {
    let fail = |history, source| RunFailure { history, source };
    if let Err(e) = params.validate() {
        return Err(fail(Vec::new(), e));
    }
    let n = evaluator.n_routes();
    let mut p = vec![1.0 / n as f64; n];
    let mut delta = params.delta;
    let mut history: Vec<IterationResult> = Vec::new();
    for iteration in 1..=params.max_iterations {
        let stats = match evaluator.evaluate(&p, demand, seed, iteration) {
            Ok(s) if s.len() == n => s,
            Ok(s) => return Err(fail(history, AssignError::RouteCount { expected: n, got: s.len() })),
            Err(e) => return Err(fail(history, e)),
        };
        let ext = extremes(&p, &stats, params.min_samples);
        let means: Vec<f64> = eligible(&p, &stats, params.min_samples)
            .into_iter()
            .map(|k| stats[k].mean.unwrap())
            .collect();
        let done = !means.is_empty() && check_termination(&means, params.termination_threshold);
        let mut it = IterationResult {
            iteration,
            probabilities: p.clone(),
            stats,
            extremes: ext,
            delta,
            dp: 0.0,
        };
        log::debug!("demand {demand} seed {seed} iteration {iteration}: spread {:.3}", it.spread());
        if done || iteration == params.max_iterations {
            history.push(it);
            return Ok(AssignmentResult::from_history(history, done, params.termination_threshold));
        }
        if let Some(e) = ext {
            let previous = history
                .last()
                .and_then(|h| h.extremes)
                .map(|h| (h.slowest, h.fastest));
            delta = adapt_delta(previous, (e.slowest, e.fastest), delta, params);
            it.delta = delta;
            it.dp = match probability_shift(e.t_max, e.t_min, params.alpha, delta) {
                Ok(dp) => dp,
                Err(err) => {
                    history.push(it);
                    return Err(fail(history, err));
                }
            };
            p = update_ratios(&p, &it.stats, params.min_samples, it.dp);
            if let Some(eps) = params.reseed_epsilon {
                reseed(&mut p, eps);
            }
        }
        history.push(it);
    }
    unreachable!("the loop returns on its last iteration")
}

/// Raises every probability to at least `eps`, taking the mass evenly from the
/// routes above the floor.
fn reseed(p: &mut [f64], eps: f64) {
    let deficit: f64 = p.iter().map(|&x| (eps - x).max(0.0)).sum();
    if deficit == 0.0 {
        return;
    }
    let excess: f64 = p.iter().map(|&x| (x - eps).max(0.0)).sum();
    for x in p.iter_mut() {
        *x = if *x < eps { eps } else { *x - deficit * (*x - eps) / excess };
    }
}

/// One (demand, seed) cell of a sweep.
#[derive(Debug)]
pub struct SweepEntry {
    pub demand: f64,
    pub seed: u64,
    pub outcome: Result<AssignmentResult, RunFailure>,
}

/// Runs every (demand, seed) pair, in parallel when enabled. `on_done` sees each
/// entry as soon as it finishes, so callers can persist partial sweeps; the returned
/// list is in demand-major order.
pub fn run_sweep(
    evaluator: &dyn Evaluator,
    demands: &[f64],
    seeds: &[u64],
    params: &AssignmentParams,
    on_done: &(dyn Fn(&SweepEntry) + Sync),
) -> Vec<SweepEntry> {
    let cells: Vec<(f64, u64)> = demands
        .iter()
        .flat_map(|&d| seeds.iter().map(move |&s| (d, s)))
        .collect();
    crate::par::map(&cells, |&(demand, seed)| {
        let entry = SweepEntry {
            demand,
            seed,
            outcome: run_assignment(evaluator, demand, seed, params),
        };
        on_done(&entry);
        entry
    })
}
