//! Time stepping: spawn, force evaluation, integration, progression, removal.

use std::sync::Arc;

use glam::DVec2;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Poisson;

use super::force::social_force;
use super::spatial::SpatialHash;
use super::{SimError, SimulationConfig, SimulationOutput, TrajectorySample, TravelTimeRecord};
use crate::geometry::{ClearanceMap, DistanceField, WalkingGeometry};
use crate::routes::RouteSet;

/// Speeds are capped at this multiple of the desired speed.
pub const SPEED_CAP: f64 = 1.3;

#[derive(Debug, Clone, PartialEq)]
pub struct PedestrianState {
    pub id: u64,
    pub position: DVec2,
    pub velocity: DVec2,
    pub desired_speed: f64,
    pub radius: f64,
    /// 1-based route id.
    pub route_id: usize,
    /// Index of the next intermediate destination; equal to the number of
    /// intermediate destinations once heading for the final destination.
    pub progress_index: usize,
    pub spawn_time: f64,
    pub depart_time: Option<f64>,
    pub arrive_time: Option<f64>,
}

pub struct Simulation {
    config: SimulationConfig,
    geometry: WalkingGeometry,
    /// Per route, the chained steering fields.
    fields: Vec<Vec<Arc<DistanceField>>>,
    fallback: Arc<DistanceField>,
    clearance: ClearanceMap,
    hash: SpatialHash,
    route_choice: Option<WeightedIndex<f64>>,
    rng: ChaCha8Rng,
    pub time: f64,
    pub pedestrians: Vec<PedestrianState>,
    next_id: u64,
    backlog: u64,
    pub output: SimulationOutput,
    next_snapshot: f64,
}

impl Simulation {
    /// `probabilities[k]` is the share of route `k + 1`.
    pub fn new(routes: &RouteSet, config: &SimulationConfig, probabilities: &[f64]) -> Result<Self, SimError> {
        config.validate()?;
        if probabilities.len() != routes.len() {
            return Err(SimError::Probabilities(format!(
                "{} probabilities for {} routes",
                probabilities.len(),
                routes.len()
            )));
        }
        let sum: f64 = probabilities.iter().sum();
        if probabilities.iter().any(|p| !(*p >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
            return Err(SimError::Probabilities(format!("{probabilities:?} is not a distribution")));
        }
        let f = &config.force_parameters;
        let geometry = routes.geometry.clone();
        let clearance = ClearanceMap::new(&geometry, routes.grid(), f.wall_reach);
        let (lo, hi) = (geometry.bounds.min(), geometry.bounds.max());
        let hash = SpatialHash::new(lo, hi, 2.0 * f.interaction_range);
        Ok(Self {
            config: config.clone(),
            fields: routes.routes.iter().map(|r| r.steering_fields().to_vec()).collect(),
            fallback: routes.destination_field().clone(),
            geometry,
            clearance,
            hash,
            route_choice: Some(WeightedIndex::new(probabilities).map_err(|e| SimError::Probabilities(e.to_string()))?),
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            time: 0.0,
            pedestrians: Vec::new(),
            next_id: 0,
            backlog: 0,
            output: SimulationOutput {
                spawned_per_route: vec![0; routes.len()],
                ..Default::default()
            },
            next_snapshot: 0.0,
        })
    }

    /// Adds a pedestrian directly, bypassing the spawner.
    pub fn insert(&mut self, mut p: PedestrianState) {
        p.id = self.next_id;
        self.next_id += 1;
        self.output.spawned += 1;
        self.output.spawned_per_route[p.route_id - 1] += 1;
        self.pedestrians.push(p);
    }

    /// Turns off spawning; only inserted pedestrians move.
    pub fn disable_spawning(&mut self) {
        self.route_choice = None;
    }

    pub fn steering_fields(&self, route_id: usize) -> &[Arc<DistanceField>] {
        &self.fields[route_id - 1]
    }

    fn is_free(&self, p: DVec2) -> bool {
        self.geometry.is_free(p)
    }

    fn spawn(&mut self, dt: f64) {
        let Some(choice) = self.route_choice.clone() else {
            return;
        };
        let lambda = self.config.demand * dt;
        let fresh = if lambda > 0.0 {
            Poisson::new(lambda).map(|d| d.sample(&mut self.rng) as u64).unwrap_or(0)
        } else {
            0
        };
        let wanted = self.backlog + fresh;
        self.backlog = 0;
        let radius = self.config.force_parameters.radius;
        let (lo, hi) = self.geometry.origin.bbox();
        for _ in 0..wanted {
            let mut placed = None;
            for _ in 0..self.config.spawn_attempts {
                let p = DVec2::new(self.rng.random_range(lo.x..=hi.x), self.rng.random_range(lo.y..=hi.y));
                if !self.geometry.origin.contains(p) || !self.is_free(p) {
                    continue;
                }
                if self.clearance.nearest(p).is_some_and(|(_, d)| d < radius) {
                    continue;
                }
                if self
                    .pedestrians
                    .iter()
                    .any(|q| q.position.distance(p) < q.radius + radius)
                {
                    continue;
                }
                placed = Some(p);
                break;
            }
            let Some(position) = placed else {
                self.backlog += 1;
                self.output.deferred_spawns += 1;
                continue;
            };
            let route = choice.sample(&mut self.rng) + 1;
            let desired_speed = self.config.speed_distribution.sample(&mut self.rng);
            let id = self.next_id;
            self.next_id += 1;
            self.output.spawned += 1;
            self.output.spawned_per_route[route - 1] += 1;
            self.pedestrians.push(PedestrianState {
                id,
                position,
                velocity: DVec2::ZERO,
                desired_speed,
                radius,
                route_id: route,
                progress_index: 0,
                spawn_time: self.time,
                depart_time: None,
                arrive_time: None,
            });
        }
        if self.backlog > 0 {
            log::debug!("t={:.2}: origin saturated, {} spawn(s) deferred", self.time, self.backlog);
        }
    }

    fn steering(&self, p: &PedestrianState) -> DVec2 {
        let fields = &self.fields[p.route_id - 1];
        let k = p.progress_index.min(fields.len() - 1);
        let dir = fields[k].steering_direction(p.position);
        if dir != DVec2::ZERO || fields[k].on_target(p.position) {
            return dir;
        }
        self.fallback.steering_direction(p.position)
    }

    /// Accelerations of every pedestrian, from a frozen snapshot of the state.
    fn accelerations(&self, parallel: bool) -> Vec<DVec2> {
        let params = &self.config.force_parameters;
        let peds = &self.pedestrians;
        let eval = |i: usize| {
            let p = &peds[i];
            let mut near: Vec<(DVec2, f64)> = Vec::new();
            self.hash.for_each_near(p.position, params.interaction_range, |k| {
                if k != i {
                    let q = &peds[k];
                    if q.position.distance_squared(p.position) <= params.interaction_range * params.interaction_range {
                        near.push((q.position, q.radius));
                    }
                }
            });
            social_force(
                p.position,
                p.velocity,
                p.desired_speed,
                p.radius,
                self.steering(p),
                near,
                self.clearance.nearest(p.position),
                params,
            )
        };
        if parallel {
            crate::par::map_range(peds.len(), eval)
        } else {
            crate::par::map_range_seq(peds.len(), eval)
        }
    }

    /// Advances by the configured time step.
    pub fn step(&mut self) {
        self.step_by(self.config.time_step, true);
    }

    /// Advances by `dt`. With `dt = 0` nothing changes.
    pub fn step_by(&mut self, dt: f64, parallel: bool) {
        if dt <= 0.0 {
            return;
        }
        self.spawn(dt);
        self.hash.rebuild(self.pedestrians.iter().map(|p| p.position));
        let acc = self.accelerations(parallel);
        let t_next = self.time + dt;
        let mut arrived = Vec::new();
        for (i, a) in acc.into_iter().enumerate() {
            let p = &self.pedestrians[i];
            let cap = SPEED_CAP * p.desired_speed;
            let mut v = p.velocity + a * dt;
            if v.length() > cap {
                v = v * (cap / v.length());
            }
            let old = p.position;
            let mut x = old + v * dt;
            if !self.geometry.is_free(x) {
                // slide along whichever axis stays free, or stop
                let sx = DVec2::new(x.x, old.y);
                let sy = DVec2::new(old.x, x.y);
                if self.geometry.is_free(sx) {
                    x = sx;
                    v.y = 0.0;
                } else if self.geometry.is_free(sy) {
                    x = sy;
                    v.x = 0.0;
                } else {
                    x = old;
                    v = DVec2::ZERO;
                }
                self.output.projections += 1;
            }
            debug_assert!(self.geometry.is_free(x));
            let fields = &self.fields[p.route_id - 1];
            let n_ids = fields.len() - 1;
            let radius = p.radius;
            let origin_clear = !self.geometry.origin.contains(x) && self.geometry.origin.distance_to_point(x) >= radius;
            let p = &mut self.pedestrians[i];
            p.position = x;
            p.velocity = v;
            while p.progress_index < n_ids {
                let f = &fields[p.progress_index];
                if f.on_target(x) || f.sample(x) <= radius {
                    p.progress_index += 1;
                } else {
                    break;
                }
            }
            if p.depart_time.is_none() && origin_clear {
                p.depart_time = Some(t_next);
            }
            if p.depart_time.is_some() && self.geometry.destination.contains(x) {
                p.arrive_time = Some(t_next);
                arrived.push(i);
            }
        }
        self.time = t_next;
        for &i in arrived.iter().rev() {
            let p = self.pedestrians.remove(i);
            self.output.records.push(TravelTimeRecord {
                ped_id: p.id,
                route_id: p.route_id,
                depart_s: p.depart_time.unwrap(),
                arrive_s: p.arrive_time.unwrap(),
            });
        }
        if let Some(interval) = self.config.trajectory_interval {
            if self.time + 1e-9 >= self.next_snapshot {
                for p in &self.pedestrians {
                    self.output.trajectories.push(TrajectorySample {
                        t: self.time,
                        ped_id: p.id,
                        route_id: p.route_id,
                        x: p.position.x,
                        y: p.position.y,
                    });
                }
                self.next_snapshot += interval;
            }
        }
    }

    /// Runs to the configured duration and returns the output.
    pub fn run(mut self) -> SimulationOutput {
        let steps = (self.config.duration / self.config.time_step).round() as u64;
        for _ in 0..steps {
            self.step();
        }
        self.finish()
    }

    pub fn finish(mut self) -> SimulationOutput {
        self.output.records.sort_by_key(|r| r.ped_id);
        self.output.in_system = self.pedestrians.len() as u64;
        self.output
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Polygon, Rect, TwoWallLayout};
    use crate::routes::{enumerate_routes, RouteSetConfig};
    use crate::simulate::{run_simulation, SpeedDistribution};

    /// 14 m x 4 m corridor; the destination starts at x = 11.
    fn corridor() -> RouteSet {
        let g = WalkingGeometry::new(
            "corridor",
            Rect::new(DVec2::ZERO, DVec2::new(14.0, 4.0)),
            vec![],
            Polygon::rectangle(DVec2::new(0.2, 0.3), DVec2::new(2.5, 3.7)),
            Polygon::rectangle(DVec2::new(11.0, 0.2), DVec2::new(13.8, 3.8)),
        )
        .unwrap();
        enumerate_routes(&g, &RouteSetConfig::default()).unwrap()
    }

    fn two_walls() -> RouteSet {
        enumerate_routes(&TwoWallLayout::default().build().unwrap(), &RouteSetConfig::default()).unwrap()
    }

    fn walker(x: f64, y: f64, speed: f64) -> PedestrianState {
        PedestrianState {
            id: 0,
            position: DVec2::new(x, y),
            velocity: DVec2::ZERO,
            desired_speed: speed,
            radius: 0.2,
            route_id: 1,
            progress_index: 0,
            spawn_time: 0.0,
            depart_time: Some(0.0),
            arrive_time: None,
        }
    }

    /// Distance covered from rest under the driving term alone.
    fn driven_distance(v0: f64, tau: f64, t: f64) -> f64 {
        v0 * (t - tau * (1.0 - (-t / tau).exp()))
    }

    #[test]
    fn lone_walker_matches_relaxation_transient() {
        let routes = corridor();
        let cfg = SimulationConfig {
            speed_distribution: SpeedDistribution::Constant { speed: 1.0 },
            ..Default::default()
        };
        let mut sim = Simulation::new(&routes, &cfg, &[1.0]).unwrap();
        sim.disable_spawning();
        sim.insert(walker(1.0, 2.0, 1.0));
        while sim.output.records.is_empty() && sim.time < 60.0 {
            sim.step();
        }
        let tt = sim.output.records[0].travel_time();
        // bisection on the analytic transient for 10 m
        let (mut lo, mut hi) = (0.0, 30.0);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if driven_distance(1.0, 0.5, mid) < 10.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((tt - 10.0).abs() <= 0.5, "travel time {tt}");
        assert!((tt - lo).abs() <= 0.1, "travel time {tt}, analytic {lo}");
    }

    #[test]
    fn zero_step_changes_nothing() {
        let routes = corridor();
        let mut sim = Simulation::new(&routes, &SimulationConfig::default(), &[1.0]).unwrap();
        sim.insert(walker(1.0, 2.0, 1.0));
        let before = sim.pedestrians.clone();
        sim.step_by(0.0, true);
        assert_eq!(sim.pedestrians, before);
        assert_eq!(sim.time, 0.0);
    }

    #[test]
    fn spawn_count_is_poisson() {
        let routes = corridor();
        let cfg = SimulationConfig {
            demand: 3.0,
            ..Default::default()
        };
        let out = run_simulation(&routes, &cfg, &[1.0]).unwrap();
        let expected: f64 = 1800.0;
        assert_eq!(out.deferred_spawns, 0);
        assert!((out.spawned as f64 - expected).abs() <= 3.0 * expected.sqrt(), "{}", out.spawned);
        assert_eq!(out.spawned, out.records.len() as u64 + out.in_system);
    }

    #[test]
    fn route_choice_is_multinomial() {
        let routes = two_walls();
        let cfg = SimulationConfig {
            demand: 1.0,
            duration: 200.0,
            measurement_window: [100.0, 200.0],
            ..Default::default()
        };
        let out = run_simulation(&routes, &cfg, &[0.25; 4]).unwrap();
        let n = out.spawned as f64;
        let sd = (n * 0.25 * 0.75).sqrt();
        for &c in &out.spawned_per_route {
            assert!((c as f64 - 0.25 * n).abs() <= 3.0 * sd, "{:?}", out.spawned_per_route);
        }
        let only_first = run_simulation(&routes, &cfg, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(only_first.records.iter().all(|r| r.route_id == 1));
        assert_eq!(only_first.spawned_per_route[1..], [0, 0, 0]);
    }

    #[test]
    fn invariants_hold_every_step_under_load() {
        let routes = two_walls();
        let cfg = SimulationConfig {
            demand: 6.0,
            duration: 120.0,
            measurement_window: [60.0, 120.0],
            seed: 11,
            ..Default::default()
        };
        let mut sim = Simulation::new(&routes, &cfg, &[0.25; 4]).unwrap();
        for _ in 0..2400 {
            sim.step();
            assert_eq!(sim.output.spawned, sim.output.records.len() as u64 + sim.pedestrians.len() as u64);
            for p in &sim.pedestrians {
                assert!(p.velocity.length() <= SPEED_CAP * p.desired_speed + 1e-9);
                assert!(routes.geometry.is_free(p.position), "{:?}", p.position);
                assert!(p.progress_index < sim.steering_fields(p.route_id).len());
            }
        }
        assert!(sim.output.records.iter().all(|r| r.arrive_s > r.depart_s));
        assert!(!sim.output.records.is_empty());
    }

    #[test]
    fn same_seed_same_output() {
        let routes = two_walls();
        let cfg = SimulationConfig {
            demand: 2.0,
            duration: 90.0,
            measurement_window: [0.0, 90.0],
            seed: 5,
            ..Default::default()
        };
        let a = run_simulation(&routes, &cfg, &[0.4, 0.3, 0.2, 0.1]).unwrap();
        let b = run_simulation(&routes, &cfg, &[0.4, 0.3, 0.2, 0.1]).unwrap();
        assert_eq!(a, b);
        let c = run_simulation(&routes, &SimulationConfig { seed: 6, ..cfg }, &[0.4, 0.3, 0.2, 0.1]).unwrap();
        assert_ne!(a.records, c.records);
    }

    #[test]
    fn parallel_and_sequential_steps_agree() {
        let routes = two_walls();
        let cfg = SimulationConfig {
            demand: 4.0,
            seed: 2,
            ..Default::default()
        };
        let mut a = Simulation::new(&routes, &cfg, &[0.25; 4]).unwrap();
        let mut b = Simulation::new(&routes, &cfg, &[0.25; 4]).unwrap();
        for _ in 0..600 {
            a.step_by(0.05, true);
            b.step_by(0.05, false);
        }
        assert_eq!(a.pedestrians, b.pedestrians);
    }

    #[test]
    fn bad_probabilities_are_rejected() {
        let routes = two_walls();
        let cfg = SimulationConfig::default();
        assert!(Simulation::new(&routes, &cfg, &[0.5, 0.5]).is_err());
        assert!(Simulation::new(&routes, &cfg, &[0.5, 0.5, 0.5, -0.5]).is_err());
        assert!(Simulation::new(&routes, &cfg, &[0.3, 0.3, 0.3, 0.3]).is_err());
    }
}
