//! Topologically distinct routes and their intermediate destinations.
//!
//! A route is a homotopy class of origin-destination paths with respect to the
//! free-standing obstacles of the geometry. Each route carries a chain of
//! intermediate destinations at the gateways its shortest representative passes;
//! following the chained distance fields keeps a walker inside the class.

mod destinations;
mod gateways;
mod search;
mod signature;

use std::sync::Arc;

use glam::DVec2;
use serde::Serialize;
use thiserror::Error;

pub use destinations::{
    build_chain, build_destination_at_gateway, chain_trace, contour, polyline_length, sample_polyline,
    IntermediateDestination,
};
pub use gateways::{crossed_gateways, find_gateways, Gateway, Jamb};
pub use search::{representatives, self_intersects, Representative};
pub use signature::{clusters, route_signature, Crossing, Cut, Cuts, HomotopySignature, ObstacleCluster, Side};

use crate::geometry::{distance_field, rasterize, DistanceField, GeometryError, OccupancyGrid, Target, WalkingGeometry};

#[derive(Debug, Error)]
pub enum RouteError {
    #[error("path leaves walkable space at point {index}")]
    PathNotWalkable { index: usize },
    #[error("no walkable connection from origin to destination")]
    NoConnection,
    #[error("intermediate destination at gateway {gateway} has no closed border")]
    ContourFailed { gateway: usize },
    #[error("steering fields of route {route} do not reproduce its signature")]
    Unrealizable { route: String },
    #[error("signature {0} is not among the enumerated classes")]
    SignatureNotFound(String),
    #[error("invalid route configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RouteSetConfig {
    /// Obstacles with a smaller diameter do not separate routes (m).
    pub min_obstacle_extent: f64,
    /// Classes longer than this factor times the shortest are dropped.
    pub max_detour_factor: f64,
    /// Gaps wider than this are not treated as gateways (m).
    pub max_gateway_width: f64,
    /// Distance past a gateway at which its border is anchored (m).
    pub anchor_offset: f64,
    /// Grid resolution (m).
    pub resolution: f64,
    /// Steering paths keep at least this distance from walls (m).
    pub clearance: f64,
}

impl Default for RouteSetConfig {
    fn default() -> Self {
        Self {
            min_obstacle_extent: 0.5,
            max_detour_factor: 3.0,
            max_gateway_width: 4.0,
            anchor_offset: 3.0,
            resolution: crate::geometry::DEFAULT_RESOLUTION,
            clearance: 0.3,
        }
    }
}

impl RouteSetConfig {
    pub fn validate(&self) -> Result<(), RouteError> {
        let bad = |m: &str| Err(RouteError::Config(m.to_string()));
        if !(self.min_obstacle_extent > 0.0) {
            return bad("min_obstacle_extent must be positive");
        }
        if !(self.max_detour_factor >= 1.0) {
            return bad("max_detour_factor must be at least 1");
        }
        if !(self.max_gateway_width > 0.0) {
            return bad("max_gateway_width must be positive");
        }
        if !(self.anchor_offset >= 0.0) {
            return bad("anchor_offset must be non-negative");
        }
        if !(self.resolution > 0.0 && self.resolution.is_finite()) {
            return bad("resolution must be positive");
        }
        if !(self.clearance >= 0.0) {
            return bad("clearance must be non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Route {
    /// 1-based, in order of representative length.
    pub id: usize,
    pub signature: HomotopySignature,
    /// Length of the shortest representative (m).
    pub length: f64,
    pub representative: Vec<DVec2>,
    pub intermediate_destinations: Vec<IntermediateDestination>,
    fields: Vec<Arc<DistanceField>>,
}

impl Route {
    /// Field `k` steers toward intermediate destination `k`; the last one toward the
    /// final destination.
    pub fn steering_fields(&self) -> &[Arc<DistanceField>] {
        &self.fields
    }
}

/// The enumerated routes of a geometry, sharing one grid.
#[derive(Debug, Clone)]
pub struct RouteSet {
    pub geometry: WalkingGeometry,
    pub config: RouteSetConfig,
    pub routes: Vec<Route>,
    grid: Arc<OccupancyGrid>,
    destination_field: Arc<DistanceField>,
}

impl RouteSet {
    pub fn grid(&self) -> &Arc<OccupancyGrid> {
        &self.grid
    }

    pub fn destination_field(&self) -> &Arc<DistanceField> {
        &self.destination_field
    }

    pub fn len(&self) -> usize {
        self.routes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.routes.is_empty()
    }

    pub fn route(&self, id: usize) -> Option<&Route> {
        self.routes.iter().find(|r| r.id == id)
    }

    /// Structured text listing of every route and its borders.
    pub fn export(&self) -> String {
        #[derive(Serialize)]
        struct Border {
            gateway: usize,
            level: f64,
            border: Vec<[f64; 2]>,
        }
        #[derive(Serialize)]
        struct Entry {
            id: usize,
            signature: String,
            length: f64,
            intermediate_destinations: Vec<Border>,
        }
        #[derive(Serialize)]
        struct Export<'a> {
            scenario: &'a str,
            config: &'a RouteSetConfig,
            routes: Vec<Entry>,
        }
        let round = |v: f64| (v * 1e4).round() / 1e4;
        let doc = Export {
            scenario: &self.geometry.name,
            config: &self.config,
            routes: self
                .routes
                .iter()
                .map(|r| Entry {
                    id: r.id,
                    signature: r.signature.to_string(),
                    length: round(r.length),
                    intermediate_destinations: r
                        .intermediate_destinations
                        .iter()
                        .map(|d| Border {
                            gateway: d.gateway,
                            level: round(d.level),
                            border: d.border.iter().map(|p| [round(p.x), round(p.y)]).collect(),
                        })
                        .collect(),
                })
                .collect(),
        };
        toml::to_string(&doc).expect("route export serializes")
    }
}

/// Shared state for building routes in one geometry.
struct Builder<'a> {
    geometry: &'a WalkingGeometry,
    config: &'a RouteSetConfig,
    grid: Arc<OccupancyGrid>,
    cuts: Cuts,
    gateways: Vec<Gateway>,
    destination: Arc<DistanceField>,
}

impl<'a> Builder<'a> {
    fn new(geometry: &'a WalkingGeometry, config: &'a RouteSetConfig) -> Result<Self, RouteError> {
        config.validate()?;
        let grid = rasterize(geometry, config.resolution).map_err(|e| match e {
            GeometryError::Disconnected(_) => RouteError::NoConnection,
            e => RouteError::Geometry(e),
        })?;
        let grid = Arc::new(grid.with_clearance(geometry, config.clearance));
        let origin = grid.cells_in(&geometry.origin);
        let seen = grid.reachable_from(&origin);
        if !grid.cells_in(&geometry.destination).iter().any(|&c| seen[c]) {
            return Err(RouteError::NoConnection);
        }
        let destination = Arc::new(distance_field(grid.clone(), Target::Polygon(&geometry.destination))?);
        Ok(Self {
            geometry,
            config,
            grid,
            cuts: Cuts::new(geometry, config),
            gateways: find_gateways(geometry, config.min_obstacle_extent),
            destination,
        })
    }

    /// Sample starts spread over the origin region.
    fn origin_samples(&self) -> Vec<DVec2> {
        let bb = self.geometry.origin.bbox();
        let mut out = Vec::new();
        for fy in [0.2, 0.5, 0.8] {
            for fx in [0.2, 0.5, 0.8] {
                let p = bb.0 + (bb.1 - bb.0) * DVec2::new(fx, fy);
                let walkable = self.grid.cell_of(p).is_some_and(|c| self.grid.is_walkable(c));
                if self.geometry.origin.contains(p) && walkable {
                    out.push(p);
                }
            }
        }
        if out.is_empty() {
            if let Some(&c) = self.grid.cells_in(&self.geometry.origin).first() {
                out.push(self.grid.center(c));
            }
        }
        out
    }

    fn realizes(&self, fields: &[Arc<DistanceField>], signature: &HomotopySignature) -> bool {
        let step = 0.5 * self.grid.resolution();
        self.origin_samples().into_iter().all(|p| {
            let (trace, reached) = chain_trace(p, fields, step);
            reached && self.cuts.signature_of(&trace) == *signature
        })
    }

    fn build(&self, rep: &Representative) -> Result<Route, RouteError> {
        let crossed = crossed_gateways(&rep.path, &self.gateways);
        let narrow: Vec<&Gateway> = crossed
            .iter()
            .copied()
            .filter(|g| g.width() <= self.config.max_gateway_width)
            .collect();
        let mut attempts = vec![narrow];
        if attempts[0].len() != crossed.len() {
            attempts.push(crossed);
        }
        let mut last_err = None;
        for gates in attempts {
            // the route's fields see the doors it does not use as closed
            let reach = 0.75 * self.grid.resolution();
            let plugs: Vec<&Gateway> = self
                .gateways
                .iter()
                .filter(|g| g.width() <= self.config.max_gateway_width)
                .filter(|g| !gates.iter().any(|u| u.id == g.id))
                .collect();
            let grid = Arc::new(
                self.grid
                    .with_blocked(|c| plugs.iter().any(|g| g.segment.distance_to_point(c) <= reach)),
            );
            let destination = if plugs.is_empty() {
                self.destination.clone()
            } else {
                Arc::new(distance_field(grid.clone(), Target::Polygon(&self.geometry.destination))?)
            };
            match build_chain(&gates, &grid, &destination, self.config) {
                Ok((ids, fields)) => {
                    if self.realizes(&fields, &rep.signature) {
                        return Ok(Route {
                            id: 0,
                            signature: rep.signature.clone(),
                            length: rep.length,
                            representative: rep.path.clone(),
                            intermediate_destinations: ids,
                            fields,
                        });
                    }
                    last_err = Some(RouteError::Unrealizable {
                        route: rep.signature.to_string(),
                    });
                }
                Err(e) => last_err = Some(e),
            }
        }
        Err(last_err.unwrap())
    }

    /// Room label per cell, where rooms are the parts of the walkable space separated
    /// by gateways. Cells inside a gateway carry no label.
    fn rooms(&self) -> Vec<Option<u32>> {
        let reach = 0.75 * self.grid.resolution();
        let doors: Vec<&Gateway> = self
            .gateways
            .iter()
            .filter(|g| g.width() <= self.config.max_gateway_width)
            .collect();
        let plugged = self
            .grid
            .with_blocked(|c| doors.iter().any(|g| g.segment.distance_to_point(c) <= reach));
        let mut label: Vec<Option<u32>> = vec![None; plugged.len()];
        let mut next = 0;
        for seed in 0..plugged.len() {
            if !plugged.is_walkable(seed) || label[seed].is_some() {
                continue;
            }
            for (c, hit) in plugged.reachable_from(&[seed]).into_iter().enumerate() {
                if hit {
                    label[c] = Some(next);
                }
            }
            next += 1;
        }
        label
    }

    /// Representatives that pass through each room at most once.
    fn representatives(&self) -> Result<Vec<Representative>, RouteError> {
        let mut reps = representatives(self.geometry, &self.grid, &self.cuts, self.config.max_detour_factor);
        let rooms = self.rooms();
        reps.retain(|r| {
            let mut seq: Vec<u32> = Vec::new();
            for p in &r.path {
                if let Some(room) = self.grid.cell_of(*p).and_then(|c| rooms[c]) {
                    if seq.last() != Some(&room) {
                        seq.push(room);
                    }
                }
            }
            let mut sorted = seq.clone();
            sorted.sort_unstable();
            sorted.dedup();
            sorted.len() == seq.len()
        });
        if reps.is_empty() {
            return Err(RouteError::NoConnection);
        }
        Ok(reps)
    }
}

fn preferred_rank(geometry: &WalkingGeometry, signature: &HomotopySignature) -> Result<usize, RouteError> {
    for (k, text) in geometry.route_order.iter().enumerate() {
        match HomotopySignature::parse(text) {
            Some(s) if s == *signature => return Ok(k),
            Some(_) => {}
            None => return Err(RouteError::Config(format!("bad route_order entry {text:?}"))),
        }
    }
    Ok(usize::MAX)
}

/// One route per homotopy class within the detour bound, numbered from 1. Classes
/// listed in the geometry's `route_order` come first in that order, the rest follow
/// by representative length and then signature.
pub fn enumerate_routes(geometry: &WalkingGeometry, config: &RouteSetConfig) -> Result<RouteSet, RouteError> {
    let b = Builder::new(geometry, config)?;
    let reps = b.representatives()?;
    let built = crate::par::map(&reps, |r| b.build(r));
    let mut routes = built.into_iter().collect::<Result<Vec<_>, _>>()?;
    let mut rank = Vec::with_capacity(routes.len());
    for r in &routes {
        rank.push(preferred_rank(geometry, &r.signature)?);
    }
    for text in &geometry.route_order {
        let sig = HomotopySignature::parse(text).ok_or_else(|| RouteError::Config(format!("bad route_order entry {text:?}")))?;
        if !routes.iter().any(|r| r.signature == sig) {
            return Err(RouteError::SignatureNotFound(text.clone()));
        }
    }
    let mut order: Vec<usize> = (0..routes.len()).collect();
    // routes arrive shortest first; a stable sort keeps that among unlisted ones
    order.sort_by_key(|&k| rank[k]);
    let mut slots: Vec<Option<Route>> = routes.drain(..).map(Some).collect();
    for (k, &i) in order.iter().enumerate() {
        let mut r = slots[i].take().unwrap();
        r.id = k + 1;
        routes.push(r);
    }
    log::info!("{} route(s) in {}", routes.len(), geometry.name);
    Ok(RouteSet {
        geometry: geometry.clone(),
        config: *config,
        routes,
        grid: b.grid,
        destination_field: b.destination,
    })
}

/// Builds the route of a single class. The grid must match `config.resolution`.
pub fn build_intermediate_destinations(
    signature: &HomotopySignature,
    geometry: &WalkingGeometry,
    grid: &OccupancyGrid,
    config: &RouteSetConfig,
) -> Result<Route, RouteError> {
    let config = RouteSetConfig {
        resolution: grid.resolution(),
        ..*config
    };
    let b = Builder::new(geometry, &config)?;
    let rep = b
        .representatives()?
        .into_iter()
        .find(|r| r.signature == *signature)
        .ok_or_else(|| RouteError::SignatureNotFound(signature.to_string()))?;
    let mut route = b.build(&rep)?;
    route.id = 1;
    Ok(route)
}
