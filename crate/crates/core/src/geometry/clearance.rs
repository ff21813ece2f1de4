use glam::DVec2;

use super::grid::OccupancyGrid;
use super::polygon::Segment;
use super::scenario::WalkingGeometry;

/// Per-cell nearest wall segment, for fast obstacle-force queries.
///
/// Stores, for every cell, the wall segments within `reach` of its center (nearest
/// first). A query at any point inside the cell then only scans that short list.
#[derive(Debug, Clone)]
pub struct ClearanceMap {
    segments: Vec<Segment>,
    offsets: Vec<u32>,
    candidates: Vec<u32>,
    resolution: f64,
    origin: DVec2,
    dims: (usize, usize),
}

impl ClearanceMap {
    pub fn new(geometry: &WalkingGeometry, grid: &OccupancyGrid, reach: f64) -> Self {
        let segments = geometry.wall_segments();
        // a point in the cell is at most half a diagonal from the center
        let slack = grid.resolution() * std::f64::consts::FRAC_1_SQRT_2;
        let mut offsets = Vec::with_capacity(grid.len() + 1);
        let mut candidates = Vec::new();
        offsets.push(0);
        for c in 0..grid.len() {
            let center = grid.center(c);
            let mut near: Vec<(f64, u32)> = segments
                .iter()
                .enumerate()
                .map(|(k, s)| (s.distance_to_point(center), k as u32))
                .filter(|(d, _)| *d <= reach + slack)
                .collect();
            near.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            candidates.extend(near.into_iter().map(|(_, k)| k));
            offsets.push(candidates.len() as u32);
        }
        Self {
            segments,
            offsets,
            candidates,
            resolution: grid.resolution(),
            origin: grid.origin(),
            dims: grid.dims(),
        }
    }

    /// Nearest wall point to `p` among walls within reach, with its distance.
    pub fn nearest(&self, p: DVec2) -> Option<(DVec2, f64)> {
        let q = (p - self.origin) / self.resolution;
        if q.x < 0.0 || q.y < 0.0 {
            return None;
        }
        let (i, j) = (q.x as usize, q.y as usize);
        if i >= self.dims.0 || j >= self.dims.1 {
            return None;
        }
        let c = j * self.dims.0 + i;
        let (lo, hi) = (self.offsets[c] as usize, self.offsets[c + 1] as usize);
        let mut best: Option<(DVec2, f64)> = None;
        for &k in &self.candidates[lo..hi] {
            let cp = self.segments[k as usize].closest_point(p);
            let d = cp.distance(p);
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((cp, d));
            }
        }
        best
    }
}
