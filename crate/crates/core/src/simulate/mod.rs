//! Social-force pedestrian simulation along assigned routes.
//!
//! Pedestrians appear in the origin as a Poisson stream, draw a route and a desired
//! speed, and walk the chained steering fields of their route. The travel time runs
//! from leaving the origin until entering the destination.

mod config;
mod engine;
mod force;
mod spatial;

use std::io::{self, Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{SimulationConfig, SpeedDistribution};
pub use engine::{PedestrianState, Simulation, SPEED_CAP};
pub use force::{pedestrian_repulsion, social_force, wall_repulsion, ForceParameters};
pub use spatial::SpatialHash;

use crate::routes::RouteSet;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation configuration: {0}")]
    Config(String),
    #[error("invalid route probabilities: {0}")]
    Probabilities(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TravelTimeRecord {
    pub ped_id: u64,
    pub route_id: usize,
    pub depart_s: f64,
    pub arrive_s: f64,
}

impl TravelTimeRecord {
    pub fn travel_time(&self) -> f64 {
        self.arrive_s - self.depart_s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub ped_id: u64,
    pub route_id: usize,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimulationOutput {
    /// Every arrival, in pedestrian id order.
    pub records: Vec<TravelTimeRecord>,
    pub spawned: u64,
    /// Spawns per route, index `k` for route `k + 1`.
    pub spawned_per_route: Vec<u64>,
    /// Spawns pushed to a later step because the origin was full.
    pub deferred_spawns: u64,
    /// Moves that ended inside an obstacle and were projected back.
    pub projections: u64,
    /// Pedestrians still walking at the end.
    pub in_system: u64,
    pub trajectories: Vec<TrajectorySample>,
}

/// Runs one simulation over the full configured duration.
pub fn run_simulation(
    routes: &RouteSet,
    config: &SimulationConfig,
    probabilities: &[f64],
) -> Result<SimulationOutput, SimError> {
    Ok(Simulation::new(routes, config, probabilities)?.run())
}

/// Mean travel time and sample count of one route in a window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RouteMean {
    /// `None` when no pedestrian of the route arrived in the window.
    pub mean: Option<f64>,
    pub count: usize,
}

/// Per-route means over arrivals with `start <= arrive <= end`; `n_routes` entries,
/// index `k` for route `k + 1`.
pub fn average_travel_times(records: &[TravelTimeRecord], window: [f64; 2], n_routes: usize) -> Vec<RouteMean> {
    let mut sums = vec![0.0; n_routes];
    let mut counts = vec![0usize; n_routes];
    for r in records {
        if r.arrive_s >= window[0] && r.arrive_s <= window[1] && (1..=n_routes).contains(&r.route_id) {
            sums[r.route_id - 1] += r.travel_time();
            counts[r.route_id - 1] += 1;
        }
    }
    sums.iter()
        .zip(&counts)
        .map(|(&s, &count)| RouteMean {
            mean: (count > 0).then(|| s / count as f64),
            count,
        })
        .collect()
}

/// Writes `# `-prefixed header lines, one per line of `header`.
pub fn write_header(w: &mut impl Write, header: &str) -> io::Result<()> {
    for line in header.lines() {
        writeln!(w, "# {line}")?;
    }
    Ok(())
}

pub fn write_records_csv(w: &mut impl Write, header: &str, records: &[TravelTimeRecord]) -> io::Result<()> {
    write_header(w, header)?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["ped_id", "route_id", "depart_s", "arrive_s"])?;
    for r in records {
        out.write_record([
            r.ped_id.to_string(),
            r.route_id.to_string(),
            format!("{:.3}", r.depart_s),
            format!("{:.3}", r.arrive_s),
        ])?;
    }
    out.flush()
}

pub fn read_records_csv(r: impl Read) -> Result<Vec<TravelTimeRecord>, csv::Error> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(r)
        .deserialize()
        .collect()
}

pub fn write_trajectories_csv(w: &mut impl Write, header: &str, samples: &[TrajectorySample]) -> io::Result<()> {
    write_header(w, header)?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["t", "ped_id", "route_id", "x", "y"])?;
    for s in samples {
        out.write_record([
            format!("{:.2}", s.t),
            s.ped_id.to_string(),
            s.route_id.to_string(),
            format!("{:.3}", s.x),
            format!("{:.3}", s.y),
        ])?;
    }
    out.flush()
}
