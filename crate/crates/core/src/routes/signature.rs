//! Homotopy signatures from crossings of obstacle cuts.
//!
//! Every qualifying obstacle cluster gets a vertical cut running from its top-most
//! vertex up to the bounds. A path's signature is the sequence of cuts it crosses,
//! each tagged with the side of the traveler on which the obstacle lies, with
//! immediate back-and-forth crossings of the same cut cancelled. Two paths between
//! the same endpoints are deformable into each other without sweeping over a
//! qualifying obstacle iff their signatures agree.

use std::fmt;

use glam::DVec2;

use super::{RouteError, RouteSetConfig};
use crate::geometry::{Polygon, Segment, WalkingGeometry};

/// Side of the traveler on which the passed obstacle lies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn opposite(self) -> Self {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Crossing {
    /// Smallest obstacle index of the cluster.
    pub obstacle: usize,
    pub side: Side,
}

impl fmt::Display for Crossing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self.side {
            Side::Left => 'L',
            Side::Right => 'R',
        };
        write!(f, "{}{}", self.obstacle, s)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HomotopySignature(Vec<Crossing>);

impl HomotopySignature {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn crossings(&self) -> &[Crossing] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Appends a crossing, cancelling it against an immediate reversal.
    pub fn push(&mut self, c: Crossing) {
        match self.0.last() {
            Some(last) if last.obstacle == c.obstacle && last.side == c.side.opposite() => {
                self.0.pop();
            }
            _ => self.0.push(c),
        }
    }

    /// No obstacle appears twice (the path does not wind around anything).
    pub fn is_loop_free(&self) -> bool {
        let mut seen: Vec<usize> = self.0.iter().map(|c| c.obstacle).collect();
        seen.sort_unstable();
        seen.windows(2).all(|w| w[0] != w[1])
    }

    pub fn parse(text: &str) -> Option<Self> {
        let text = text.trim();
        if text == "-" || text.is_empty() {
            return Some(Self::new());
        }
        let mut out = Vec::new();
        for tok in text.split_whitespace() {
            let (num, side) = tok.split_at(tok.len() - 1);
            let side = match side {
                "L" => Side::Left,
                "R" => Side::Right,
                _ => return None,
            };
            out.push(Crossing {
                obstacle: num.parse().ok()?,
                side,
            });
        }
        Some(Self(out))
    }
}

impl fmt::Display for HomotopySignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "-");
        }
        let parts: Vec<String> = self.0.iter().map(|c| c.to_string()).collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// Obstacles grouped by contact, with their anchoring and size.
#[derive(Debug, Clone)]
pub struct ObstacleCluster {
    pub id: usize,
    pub members: Vec<usize>,
    /// Touches the bounds, so it is part of the outer boundary.
    pub anchored: bool,
    pub extent: f64,
}

impl ObstacleCluster {
    /// A free-standing cluster large enough to separate routes.
    pub fn qualifies(&self, min_extent: f64) -> bool {
        !self.anchored && self.extent >= min_extent
    }
}

pub fn clusters(geometry: &WalkingGeometry) -> Vec<ObstacleCluster> {
    const TOUCH: f64 = 1e-6;
    let n = geometry.obstacles.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            let (_, _, d) = geometry.obstacles[i].closest_points(&geometry.obstacles[j]);
            if d <= TOUCH {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let lo = geometry.bounds.min();
    let hi = geometry.bounds.max();
    let touches_bounds = |p: &Polygon| {
        p.vertices().iter().any(|v| {
            v.x <= lo.x + TOUCH || v.y <= lo.y + TOUCH || v.x >= hi.x - TOUCH || v.y >= hi.y - TOUCH
        })
    };
    let mut out: Vec<ObstacleCluster> = Vec::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        match out.iter_mut().find(|c| c.id == root) {
            Some(c) => c.members.push(i),
            None => out.push(ObstacleCluster {
                id: root,
                members: vec![i],
                anchored: false,
                extent: 0.0,
            }),
        }
    }
    for c in &mut out {
        let vertices: Vec<DVec2> = c
            .members
            .iter()
            .flat_map(|&m| geometry.obstacles[m].vertices().iter().copied())
            .collect();
        let mut extent: f64 = 0.0;
        for (k, a) in vertices.iter().enumerate() {
            for b in &vertices[k + 1..] {
                extent = extent.max(a.distance(*b));
            }
        }
        c.extent = extent;
        c.anchored = c.members.iter().any(|&m| touches_bounds(&geometry.obstacles[m]));
    }
    out
}

/// Vertical cut above a qualifying cluster.
#[derive(Debug, Clone, Copy)]
pub struct Cut {
    pub obstacle: usize,
    pub x: f64,
    pub y: f64,
}

/// The cut system of a geometry under a given configuration.
#[derive(Debug, Clone)]
pub struct Cuts {
    cuts: Vec<Cut>,
}

impl Cuts {
    pub fn new(geometry: &WalkingGeometry, config: &RouteSetConfig) -> Self {
        let cuts = clusters(geometry)
            .into_iter()
            .filter(|c| c.qualifies(config.min_obstacle_extent))
            .map(|c| {
                let top = c
                    .members
                    .iter()
                    .flat_map(|&m| geometry.obstacles[m].vertices().iter().copied())
                    .fold(DVec2::new(f64::INFINITY, f64::NEG_INFINITY), |best, v| {
                        if v.y > best.y || (v.y == best.y && v.x < best.x) {
                            v
                        } else {
                            best
                        }
                    });
                Cut {
                    obstacle: c.id,
                    x: top.x,
                    y: top.y,
                }
            })
            .collect();
        Self { cuts }
    }

    pub fn cuts(&self) -> &[Cut] {
        &self.cuts
    }

    pub fn is_empty(&self) -> bool {
        self.cuts.is_empty()
    }

    /// Crossings of the segment `a -> b`, ordered along the segment.
    pub fn crossings(&self, a: DVec2, b: DVec2) -> impl Iterator<Item = Crossing> + '_ {
        let mut hits: Vec<(f64, Crossing)> = Vec::new();
        for cut in &self.cuts {
            let left_a = a.x < cut.x;
            let left_b = b.x < cut.x;
            if left_a == left_b {
                continue;
            }
            let t = (cut.x - a.x) / (b.x - a.x);
            let y = a.y + t * (b.y - a.y);
            if y >= cut.y {
                // eastward travel past an upward cut keeps the obstacle on the right
                let side = if left_a { Side::Right } else { Side::Left };
                hits.push((
                    t,
                    Crossing {
                        obstacle: cut.obstacle,
                        side,
                    },
                ));
            }
        }
        if hits.len() > 1 {
            hits.sort_by(|p, q| p.0.total_cmp(&q.0));
        }
        hits.into_iter().map(|(_, c)| c)
    }

    pub fn signature_of(&self, path: &[DVec2]) -> HomotopySignature {
        let mut sig = HomotopySignature::new();
        for w in path.windows(2) {
            for c in self.crossings(w[0], w[1]) {
                sig.push(c);
            }
        }
        sig
    }
}

/// Signature of a walkable polyline with respect to the qualifying obstacles.
pub fn route_signature(
    path: &[DVec2],
    geometry: &WalkingGeometry,
    config: &RouteSetConfig,
) -> Result<HomotopySignature, RouteError> {
    for (index, p) in path.iter().enumerate() {
        if !geometry.is_free(*p) {
            return Err(RouteError::PathNotWalkable { index });
        }
    }
    for (index, w) in path.windows(2).enumerate() {
        let seg = Segment::new(w[0], w[1]);
        if geometry.obstacles.iter().any(|o| o.blocks_segment(&seg)) {
            return Err(RouteError::PathNotWalkable { index });
        }
    }
    Ok(Cuts::new(geometry, config).signature_of(path))
}
