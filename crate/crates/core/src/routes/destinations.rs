//! Intermediate destinations: iso-distance borders placed at gateways.
//!
//! Built backward from the final destination. For each gateway the border is the
//! contour of the downstream distance field through an anchor just past the gateway,
//! so every border point is equally far from the next downstream target. The region
//! behind the border becomes the target of the next upstream field.

use std::collections::BTreeMap;
use std::sync::Arc;

use glam::DVec2;

use super::gateways::Gateway;
use super::{RouteError, RouteSetConfig};
use crate::geometry::{descend, distance_field, DistanceField, OccupancyGrid, Target, NEIGHBORS_4};

#[derive(Debug, Clone)]
pub struct IntermediateDestination {
    pub gateway: usize,
    /// Point where the border meets the route's centerline.
    pub anchor: DVec2,
    /// Downstream distance of every border point.
    pub level: f64,
    /// Upstream border polyline.
    pub border: Vec<DVec2>,
    /// Grid cells of the region, the target of the upstream field.
    pub cells: Vec<usize>,
}

impl IntermediateDestination {
    pub fn border_length(&self) -> f64 {
        polyline_length(&self.border)
    }

    /// `n` points evenly spaced along the border by arc length.
    pub fn sample_border(&self, n: usize) -> Vec<DVec2> {
        sample_polyline(&self.border, n)
    }
}

pub fn polyline_length(points: &[DVec2]) -> f64 {
    points.windows(2).map(|w| w[0].distance(w[1])).sum()
}

pub fn sample_polyline(points: &[DVec2], n: usize) -> Vec<DVec2> {
    if points.len() < 2 || n == 0 {
        return points.iter().take(n).copied().collect();
    }
    let total = polyline_length(points);
    let mut out = Vec::with_capacity(n);
    let mut seg = 0;
    let mut walked = 0.0;
    for k in 0..n {
        let s = if n == 1 { 0.5 * total } else { total * k as f64 / (n - 1) as f64 };
        while seg + 2 < points.len() && walked + points[seg].distance(points[seg + 1]) < s {
            walked += points[seg].distance(points[seg + 1]);
            seg += 1;
        }
        let len = points[seg].distance(points[seg + 1]);
        let t = if len > 0.0 { ((s - walked) / len).clamp(0.0, 1.0) } else { 0.0 };
        out.push(points[seg].lerp(points[seg + 1], t));
    }
    out
}

/// Iso-lines of `field` at `level` over grid squares whose four corners pass `accept`.
/// Returned as polylines through the crossing points on grid edges.
pub fn contour(field: &DistanceField, level: f64, accept: impl Fn(usize) -> bool) -> Vec<Vec<DVec2>> {
    let grid = field.grid();
    let (nx, ny) = grid.dims();
    type Key = (usize, usize);
    let mut points: BTreeMap<Key, DVec2> = BTreeMap::new();
    let mut segments: Vec<(Key, Key)> = Vec::new();
    let crossing = |a: usize, b: usize, points: &mut BTreeMap<Key, DVec2>| -> Key {
        let key = (a.min(b), a.max(b));
        points.entry(key).or_insert_with(|| {
            let (va, vb) = (field.value(a), field.value(b));
            let t = ((level - va) / (vb - va)).clamp(0.0, 1.0);
            grid.center(a).lerp(grid.center(b), t)
        });
        key
    };
    for j in 0..ny.saturating_sub(1) {
        for i in 0..nx.saturating_sub(1) {
            let c = [
                grid.index(i, j),
                grid.index(i + 1, j),
                grid.index(i + 1, j + 1),
                grid.index(i, j + 1),
            ];
            if !c.iter().all(|&x| grid.is_walkable(x) && field.value(x).is_finite() && accept(x)) {
                continue;
            }
            let inside: Vec<bool> = c.iter().map(|&x| field.value(x) <= level).collect();
            // edge e joins corner e and corner e+1, counter-clockwise from bottom
            let crossed: Vec<usize> = (0..4).filter(|&e| inside[e] != inside[(e + 1) % 4]).collect();
            match crossed.len() {
                2 => {
                    let a = crossing(c[crossed[0]], c[(crossed[0] + 1) % 4], &mut points);
                    let b = crossing(c[crossed[1]], c[(crossed[1] + 1) % 4], &mut points);
                    segments.push((a, b));
                }
                4 => {
                    let mean = c.iter().map(|&x| field.value(x)).sum::<f64>() / 4.0;
                    let center_inside = mean <= level;
                    // cut off every corner that disagrees with the center
                    for k in 0..4 {
                        if inside[k] != center_inside {
                            let e_in = (k + 3) % 4;
                            let a = crossing(c[e_in], c[(e_in + 1) % 4], &mut points);
                            let b = crossing(c[k], c[(k + 1) % 4], &mut points);
                            segments.push((a, b));
                        }
                    }
                }
                _ => {}
            }
        }
    }

    let mut adjacency: BTreeMap<Key, Vec<usize>> = BTreeMap::new();
    for (s, &(a, b)) in segments.iter().enumerate() {
        adjacency.entry(a).or_default().push(s);
        adjacency.entry(b).or_default().push(s);
    }
    let mut used = vec![false; segments.len()];
    let mut lines = Vec::new();
    let walk = |start: Key, used: &mut Vec<bool>| -> Vec<DVec2> {
        let mut line = vec![points[&start]];
        let mut at = start;
        while let Some(&s) = adjacency[&at].iter().find(|&&s| !used[s]) {
            used[s] = true;
            let (a, b) = segments[s];
            at = if a == at { b } else { a };
            line.push(points[&at]);
        }
        line
    };
    // open chains first, starting from their ends, then closed loops
    let ends: Vec<Key> = adjacency
        .iter()
        .filter(|(_, v)| v.len() == 1)
        .map(|(k, _)| *k)
        .collect();
    for k in ends {
        if adjacency[&k].iter().any(|&s| !used[s]) {
            lines.push(walk(k, &mut used));
        }
    }
    let keys: Vec<Key> = adjacency.keys().copied().collect();
    for k in keys {
        if adjacency[&k].iter().any(|&s| !used[s]) {
            lines.push(walk(k, &mut used));
        }
    }
    lines
}

/// Builds the intermediate destination at `gateway` whose border is equidistant to the
/// target of `downstream`.
pub fn build_destination_at_gateway(
    gateway: &Gateway,
    downstream: &DistanceField,
    config: &RouteSetConfig,
) -> Result<IntermediateDestination, RouteError> {
    let grid = downstream.grid();
    let res = grid.resolution();
    let failed = RouteError::ContourFailed { gateway: gateway.id };
    let mid = gateway.midpoint();
    let at_mid = downstream.sample(mid);
    if !at_mid.is_finite() {
        return Err(failed);
    }

    // step past the gateway along the downstream field so the border lies where the
    // route runs straight
    let offset = config.anchor_offset.min(0.5 * at_mid).max(0.0);
    let step = 0.5 * res;
    let trace = descend(downstream, mid, step, (offset / step).ceil() as usize);
    let anchor = *trace.last().unwrap();
    let level = downstream.sample(anchor);
    let radius = gateway.width() + 0.5;
    let in_disc = |c: usize| grid.center(c).distance(anchor) <= radius;

    let cells = flood_region(grid, downstream, anchor, level, radius);
    if cells.is_empty() {
        return Err(failed);
    }
    let border = contour(downstream, level, in_disc)
        .into_iter()
        .filter(|l| l.len() >= 2)
        .min_by(|a, b| {
            let d = |l: &Vec<DVec2>| l.iter().map(|p| p.distance(anchor)).fold(f64::INFINITY, f64::min);
            d(a).total_cmp(&d(b))
        })
        .ok_or(RouteError::ContourFailed { gateway: gateway.id })?;
    if polyline_length(&border) < res {
        return Err(failed);
    }
    Ok(IntermediateDestination {
        gateway: gateway.id,
        anchor,
        level,
        border,
        cells,
    })
}

/// Walkable cells within `radius` of `anchor` at or below `level`, 4-connected to the
/// anchor.
fn flood_region(
    grid: &OccupancyGrid,
    field: &DistanceField,
    anchor: DVec2,
    level: f64,
    radius: f64,
) -> Vec<usize> {
    let ok = |c: usize| {
        grid.is_walkable(c) && field.value(c) <= level && grid.center(c).distance(anchor) <= radius
    };
    let Some(home) = grid.cell_of(anchor) else {
        return Vec::new();
    };
    let mut seeds: Vec<usize> = Vec::new();
    for dj in -2..=2 {
        for di in -2..=2 {
            if let Some(c) = grid.offset(home, di, dj) {
                if ok(c) {
                    seeds.push(c);
                }
            }
        }
    }
    let mut seen = vec![false; grid.len()];
    let mut stack = seeds;
    let mut out = Vec::new();
    while let Some(c) = stack.pop() {
        if seen[c] {
            continue;
        }
        seen[c] = true;
        out.push(c);
        for (di, dj) in NEIGHBORS_4 {
            if let Some(m) = grid.offset(c, di, dj) {
                if !seen[m] && ok(m) {
                    stack.push(m);
                }
            }
        }
    }
    out.sort_unstable();
    out
}

/// Intermediate destinations for `gateways` (in route order) and the chained fields.
/// `fields[k]` steers toward destination `k`; the last field is `destination`.
pub fn build_chain(
    gateways: &[&Gateway],
    grid: &Arc<OccupancyGrid>,
    destination: &Arc<DistanceField>,
    config: &RouteSetConfig,
) -> Result<(Vec<IntermediateDestination>, Vec<Arc<DistanceField>>), RouteError> {
    let mut ids = Vec::new();
    let mut fields = vec![destination.clone()];
    for g in gateways.iter().rev() {
        let downstream = fields.last().unwrap();
        let id = build_destination_at_gateway(g, downstream, config)?;
        let field = distance_field(grid.clone(), Target::Cells(&id.cells))
            .map_err(|_| RouteError::ContourFailed { gateway: g.id })?;
        ids.push(id);
        fields.push(Arc::new(field));
    }
    ids.reverse();
    fields.reverse();
    Ok((ids, fields))
}

/// Steepest-descent trace through a chain of fields, switching on each target.
/// Returns the trace and whether the final target was reached.
pub fn chain_trace(start: DVec2, fields: &[Arc<DistanceField>], step: f64) -> (Vec<DVec2>, bool) {
    let mut path = vec![start];
    let mut p = start;
    for f in fields {
        let budget = (3.0 * f.sample(p).min(1e4) / step) as usize + 200;
        let seg = descend(f, p, step, budget);
        p = *seg.last().unwrap();
        path.extend_from_slice(&seg[1..]);
        if !f.on_target(p) {
            return (path, false);
        }
    }
    (path, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{rasterize, Polygon, Rect, Segment, WalkingGeometry};
    use crate::routes::gateways::Jamb;

    /// Corridor 12 m x 4 m with a wall at x = 6 holding a centered 1.2 m door.
    fn corridor() -> WalkingGeometry {
        WalkingGeometry::new(
            "corridor",
            Rect::new(DVec2::ZERO, DVec2::new(12.0, 4.0)),
            vec![
                Polygon::rectangle(DVec2::new(6.0, 0.0), DVec2::new(6.2, 1.4)),
                Polygon::rectangle(DVec2::new(6.0, 2.6), DVec2::new(6.2, 4.0)),
            ],
            Polygon::rectangle(DVec2::new(0.5, 0.5), DVec2::new(1.5, 3.5)),
            Polygon::rectangle(DVec2::new(10.5, 0.5), DVec2::new(11.5, 3.5)),
        )
        .unwrap()
    }

    #[test]
    fn contour_of_a_linear_ramp_is_a_straight_line() {
        let g = WalkingGeometry::new(
            "open",
            Rect::new(DVec2::ZERO, DVec2::new(6.0, 3.0)),
            vec![],
            Polygon::rectangle(DVec2::new(0.2, 0.2), DVec2::new(1.0, 2.8)),
            Polygon::rectangle(DVec2::new(5.5, 0.0), DVec2::new(6.0, 3.0)),
        )
        .unwrap();
        let grid = Arc::new(rasterize(&g, 0.1).unwrap());
        let f = distance_field(grid, Target::Polygon(&g.destination)).unwrap();
        let lines = contour(&f, 2.0, |_| true);
        assert_eq!(lines.len(), 1);
        let xs: Vec<f64> = lines[0].iter().map(|p| p.x).collect();
        let (lo, hi) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        assert!(hi - lo < 1e-6, "{lo} {hi}");
        assert!(polyline_length(&lines[0]) > 2.5);
    }

    #[test]
    fn single_door_border_is_symmetric() {
        let g = corridor();
        let res = 0.1;
        let grid = Arc::new(rasterize(&g, res).unwrap());
        let dest = distance_field(grid.clone(), Target::Polygon(&g.destination)).unwrap();
        let door = Gateway {
            id: 0,
            segment: Segment::new(DVec2::new(6.1, 1.4), DVec2::new(6.1, 2.6)),
            sides: (Jamb::Obstacle(0), Jamb::Obstacle(1)),
        };
        let id = build_destination_at_gateway(&door, &dest, &RouteSetConfig::default()).unwrap();
        assert!(id.border_length() > 1.0);
        // mirror every border point across the corridor axis and measure how far it
        // lands from the border
        let axis = 2.0;
        let mut worst: f64 = 0.0;
        for p in id.sample_border(60) {
            let m = DVec2::new(p.x, 2.0 * axis - p.y);
            let d = id
                .border
                .windows(2)
                .map(|w| Segment::new(w[0], w[1]).distance_to_point(m))
                .fold(f64::INFINITY, f64::min);
            worst = worst.max(d);
        }
        assert!(worst <= 2.0 * res, "asymmetry {worst}");
        // arc centered on the door axis: extreme y values balance around the axis
        let ys: Vec<f64> = id.border.iter().map(|p| p.y).collect();
        let lo = ys.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert!(((lo + hi) / 2.0 - axis).abs() <= 2.0 * res);
    }

    #[test]
    fn border_is_level_in_the_downstream_field() {
        let g = corridor();
        let grid = Arc::new(rasterize(&g, 0.1).unwrap());
        let dest = distance_field(grid.clone(), Target::Polygon(&g.destination)).unwrap();
        let door = Gateway {
            id: 3,
            segment: Segment::new(DVec2::new(6.1, 1.4), DVec2::new(6.1, 2.6)),
            sides: (Jamb::Obstacle(0), Jamb::Obstacle(1)),
        };
        let id = build_destination_at_gateway(&door, &dest, &RouteSetConfig::default()).unwrap();
        for p in id.sample_border(50) {
            assert!((dest.sample(p) - id.level).abs() < 0.05);
        }
        // the region lies downstream of its border
        for &c in &id.cells {
            assert!(dest.value(c) <= id.level + 1e-12);
        }
    }

    #[test]
    fn chained_trace_reaches_the_destination() {
        let g = corridor();
        let grid = Arc::new(rasterize(&g, 0.1).unwrap());
        let dest = Arc::new(distance_field(grid.clone(), Target::Polygon(&g.destination)).unwrap());
        let door = Gateway {
            id: 0,
            segment: Segment::new(DVec2::new(6.1, 1.4), DVec2::new(6.1, 2.6)),
            sides: (Jamb::Obstacle(0), Jamb::Obstacle(1)),
        };
        let (ids, fields) = build_chain(&[&door], &grid, &dest, &RouteSetConfig::default()).unwrap();
        assert_eq!(ids.len(), 1);
        assert_eq!(fields.len(), 2);
        let (trace, reached) = chain_trace(DVec2::new(1.0, 0.8), &fields, 0.05);
        assert!(reached);
        assert!(g.destination.contains(*trace.last().unwrap()) || dest.on_target(*trace.last().unwrap()));
    }

    #[test]
    fn sampling_spans_the_polyline() {
        let line = vec![DVec2::ZERO, DVec2::new(1.0, 0.0), DVec2::new(1.0, 1.0)];
        let s = sample_polyline(&line, 5);
        assert_eq!(s.len(), 5);
        assert!(s[0].distance(DVec2::ZERO) < 1e-12);
        assert!(s[2].distance(DVec2::new(1.0, 0.0)) < 1e-12);
        assert!(s[4].distance(DVec2::new(1.0, 1.0)) < 1e-12);
    }
}
