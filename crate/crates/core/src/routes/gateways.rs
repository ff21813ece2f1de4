//! Gateways: walkable gaps between a qualifying obstacle and its neighbors.
//!
//! A gap is the closest-point segment between a qualifying cluster and another
//! obstacle (or a bounds edge), kept when no third obstacle blocks it or reaches into
//! the disc spanned by it. In a wall with doors these are exactly the doors.

use glam::DVec2;

use super::signature::clusters;
use crate::geometry::{Segment, WalkingGeometry};

/// One side of a gateway.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Jamb {
    Obstacle(usize),
    Bounds(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gateway {
    pub id: usize,
    pub segment: Segment,
    pub sides: (Jamb, Jamb),
}

impl Gateway {
    pub fn width(&self) -> f64 {
        self.segment.length()
    }

    pub fn midpoint(&self) -> DVec2 {
        self.segment.midpoint()
    }
}

/// Closest segment between two boundaries, averaging over near-ties so parallel faces
/// yield the middle of their overlap.
fn closest_segment(a: &[Segment], b: &[Segment]) -> Segment {
    let mut pairs: Vec<(DVec2, DVec2, f64)> = Vec::new();
    let mut best = f64::INFINITY;
    for e in a {
        for f in b {
            let candidates = [
                (e.a, f.closest_point(e.a)),
                (e.b, f.closest_point(e.b)),
                (e.closest_point(f.a), f.a),
                (e.closest_point(f.b), f.b),
            ];
            for (p, q) in candidates {
                let d = p.distance(q);
                best = best.min(d);
                pairs.push((p, q, d));
            }
        }
    }
    let near: Vec<&(DVec2, DVec2, f64)> = pairs.iter().filter(|p| p.2 <= best + 1e-6).collect();
    let k = near.len() as f64;
    let p = near.iter().map(|x| x.0).sum::<DVec2>() / k;
    let q = near.iter().map(|x| x.1).sum::<DVec2>() / k;
    Segment::new(p, q)
}

/// All gateways of the geometry around obstacles of at least `min_extent`.
pub fn find_gateways(geometry: &WalkingGeometry, min_extent: f64) -> Vec<Gateway> {
    let cs = clusters(geometry);
    let cluster_of = |i: usize| cs.iter().position(|c| c.members.contains(&i)).unwrap();
    let bounds_edges = geometry.bounds.edges();
    let edges_of = |j: Jamb| -> Vec<Segment> {
        match j {
            Jamb::Obstacle(i) => geometry.obstacles[i].edges().collect(),
            Jamb::Bounds(k) => vec![bounds_edges[k]],
        }
    };
    let distance_to = |j: Jamb, p: DVec2| -> f64 {
        match j {
            Jamb::Obstacle(i) => geometry.obstacles[i].distance_to_point(p),
            Jamb::Bounds(k) => bounds_edges[k].distance_to_point(p),
        }
    };

    let all_jambs: Vec<Jamb> = (0..geometry.obstacles.len())
        .map(Jamb::Obstacle)
        .chain((0..4).map(Jamb::Bounds))
        .collect();
    let mut out: Vec<Gateway> = Vec::new();
    for q in cs.iter().filter(|c| c.qualifies(min_extent)) {
        let own: Vec<Segment> = q
            .members
            .iter()
            .flat_map(|&m| geometry.obstacles[m].edges())
            .collect();
        for &other in &all_jambs {
            if let Jamb::Obstacle(i) = other {
                if q.members.contains(&i) {
                    continue;
                }
            }
            let seg = closest_segment(&own, &edges_of(other));
            let len = seg.length();
            if len <= 1e-6 {
                continue;
            }
            let mid = seg.midpoint();
            let radius = 0.5 * len;
            // member of q that the segment starts from
            let start = q
                .members
                .iter()
                .copied()
                .min_by(|&a, &b| {
                    geometry.obstacles[a]
                        .distance_to_point(seg.a)
                        .total_cmp(&geometry.obstacles[b].distance_to_point(seg.a))
                })
                .unwrap();
            let mut sides = (Jamb::Obstacle(start), other);
            let third_party = all_jambs
                .iter()
                .filter(|&&j| j != other)
                .filter(|&&j| match j {
                    Jamb::Obstacle(i) => !q.members.contains(&i),
                    Jamb::Bounds(_) => true,
                });
            let mut clear = true;
            for &j in third_party {
                let blocked = match j {
                    Jamb::Obstacle(i) => geometry.obstacles[i].blocks_segment(&seg),
                    Jamb::Bounds(_) => false,
                };
                if blocked || distance_to(j, mid) < radius - 1e-6 {
                    clear = false;
                    break;
                }
            }
            if !clear {
                continue;
            }
            if let Jamb::Obstacle(i) = other {
                // the same gap seen from the other cluster
                let oc = cluster_of(i);
                if cs[oc].qualifies(min_extent) && cs[oc].id < q.id {
                    continue;
                }
            }
            if sides.1 < sides.0 {
                sides = (sides.1, sides.0);
            }
            out.push(Gateway {
                id: out.len(),
                segment: seg,
                sides,
            });
        }
    }
    out
}

/// Gateways crossed by `path`, in order of crossing, without immediate repeats.
pub fn crossed_gateways<'a>(path: &[DVec2], gateways: &'a [Gateway]) -> Vec<&'a Gateway> {
    let mut hits: Vec<(usize, f64, &Gateway)> = Vec::new();
    for (k, w) in path.windows(2).enumerate() {
        let s = Segment::new(w[0], w[1]);
        for g in gateways {
            if s.intersects(&g.segment) {
                let t = s
                    .intersection_point(&g.segment)
                    .map(|p| p.distance(w[0]))
                    .unwrap_or(0.0);
                hits.push((k, t, g));
            }
        }
    }
    hits.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut out: Vec<&Gateway> = Vec::new();
    for (_, _, g) in hits {
        if out.last().is_none_or(|l| l.id != g.id) {
            out.push(g);
        }
    }
    out
}
