//! Circular social force.

use glam::DVec2;
use serde::{Deserialize, Serialize};

/// Parameters of the circular social-force variant. Accelerations are per unit mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForceParameters {
    pub name: String,
    /// Driving-term relaxation time (s).
    pub relaxation_time: f64,
    /// Pedestrian repulsion strength (m/s^2) and range (m).
    pub pedestrian_strength: f64,
    pub pedestrian_range: f64,
    /// Wall repulsion strength (m/s^2) and range (m).
    pub wall_strength: f64,
    pub wall_range: f64,
    /// Center distance beyond which pedestrians ignore each other (m).
    pub interaction_range: f64,
    /// Distance beyond which walls are ignored (m).
    pub wall_reach: f64,
    /// Body radius (m).
    pub radius: f64,
}

impl Default for ForceParameters {
    fn default() -> Self {
        Self {
            name: "circular".to_string(),
            relaxation_time: 0.5,
            pedestrian_strength: 2.1,
            pedestrian_range: 0.3,
            wall_strength: 10.0,
            wall_range: 0.1,
            interaction_range: 1.5,
            wall_reach: 1.0,
            radius: 0.2,
        }
    }
}

/// Smallest center distance used in the repulsion; closer pairs saturate.
const MIN_DISTANCE: f64 = 0.1;

/// Repulsion on a body at `p` from a neighbor at `q`. Coincident centers push along +x.
#[inline]
pub fn pedestrian_repulsion(p: DVec2, q: DVec2, radii: f64, params: &ForceParameters) -> DVec2 {
    let diff = p - q;
    let d = diff.length();
    if d > params.interaction_range {
        return DVec2::ZERO;
    }
    let n = if d > 1e-9 { diff / d } else { DVec2::X };
    let d = d.max(MIN_DISTANCE);
    n * params.pedestrian_strength * ((radii - d) / params.pedestrian_range).exp()
}

/// Repulsion from the nearest wall point `w` at distance `d`.
#[inline]
pub fn wall_repulsion(p: DVec2, w: DVec2, d: f64, radius: f64, params: &ForceParameters) -> DVec2 {
    if d > params.wall_reach || d < 1e-9 {
        return DVec2::ZERO;
    }
    let n = (p - w) / d;
    let d = d.max(MIN_DISTANCE);
    n * params.wall_strength * ((radius - d) / params.wall_range).exp()
}

/// Acceleration of one pedestrian: driving term toward `desired_speed * steering`,
/// plus circular repulsion from `neighbors` (position, radius) and from the nearest
/// wall point.
#[allow(clippy::too_many_arguments)]
pub fn social_force(
    position: DVec2,
    velocity: DVec2,
    desired_speed: f64,
    radius: f64,
    steering: DVec2,
    neighbors: impl IntoIterator<Item = (DVec2, f64)>,
    nearest_wall: Option<(DVec2, f64)>,
    params: &ForceParameters,
) -> DVec2 {
    let mut a = (steering * desired_speed - velocity) / params.relaxation_time;
    for (q, rq) in neighbors {
        a += pedestrian_repulsion(position, q, radius + rq, params);
    }
    if let Some((w, d)) = nearest_wall {
        a += wall_repulsion(position, w, d, radius, params);
    }
    a
}
