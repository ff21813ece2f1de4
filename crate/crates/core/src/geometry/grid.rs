use std::collections::VecDeque;

use glam::DVec2;

use super::polygon::Polygon;
use super::scenario::WalkingGeometry;
use super::GeometryError;

/// Rasterized walkability. Cell `(i, j)` has its center at
/// `origin + ((i + 0.5) * resolution, (j + 0.5) * resolution)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    resolution: f64,
    origin: DVec2,
    nx: usize,
    ny: usize,
    walkable: Vec<bool>,
}

pub const NEIGHBORS_4: [(isize, isize); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
pub const NEIGHBORS_8: [(isize, isize); 8] = [
    (1, 0),
    (-1, 0),
    (0, 1),
    (0, -1),
    (1, 1),
    (1, -1),
    (-1, 1),
    (-1, -1),
];

impl OccupancyGrid {
    /// Grid over `bounds` where a cell is walkable iff its center is in bounds and
    /// outside every obstacle.
    pub fn from_geometry(geometry: &WalkingGeometry, resolution: f64) -> Result<Self, GeometryError> {
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(GeometryError::BadResolution(resolution));
        }
        let origin = geometry.bounds.min();
        let size = geometry.bounds.size();
        let nx = ((size.x / resolution) - 1e-9).ceil().max(1.0) as usize;
        let ny = ((size.y / resolution) - 1e-9).ceil().max(1.0) as usize;
        let mut walkable = vec![false; nx * ny];
        let boxes: Vec<(DVec2, DVec2)> = geometry.obstacles.iter().map(|o| o.bbox()).collect();
        for j in 0..ny {
            for i in 0..nx {
                let c = origin + DVec2::new(i as f64 + 0.5, j as f64 + 0.5) * resolution;
                let blocked = geometry.obstacles.iter().zip(&boxes).any(|(o, (lo, hi))| {
                    c.x >= lo.x && c.x <= hi.x && c.y >= lo.y && c.y <= hi.y && o.contains(c)
                });
                walkable[j * nx + i] = geometry.bounds.contains(c) && !blocked;
            }
        }
        Ok(Self {
            resolution,
            origin,
            nx,
            ny,
            walkable,
        })
    }

    /// Copy with every walkable cell whose center satisfies `blocked` turned solid.
    pub fn with_blocked(&self, blocked: impl Fn(DVec2) -> bool) -> Self {
        let mut out = self.clone();
        for c in 0..out.walkable.len() {
            if out.walkable[c] && blocked(self.center(c)) {
                out.walkable[c] = false;
            }
        }
        out
    }

    /// Copy where cells closer than `clearance` to any wall are solid, so paths on the
    /// grid keep a body's radius off the walls.
    pub fn with_clearance(&self, geometry: &WalkingGeometry, clearance: f64) -> Self {
        if clearance <= 0.0 {
            return self.clone();
        }
        let walls = geometry.wall_segments();
        self.with_blocked(|c| walls.iter().any(|w| w.distance_to_point(c) < clearance))
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn origin(&self) -> DVec2 {
        self.origin
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn len(&self) -> usize {
        self.walkable.len()
    }

    pub fn is_empty(&self) -> bool {
        self.walkable.is_empty()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.nx, idx / self.nx)
    }

    #[inline]
    pub fn is_walkable(&self, idx: usize) -> bool {
        self.walkable[idx]
    }

    pub fn walkable_count(&self) -> usize {
        self.walkable.iter().filter(|w| **w).count()
    }

    #[inline]
    pub fn center(&self, idx: usize) -> DVec2 {
        let (i, j) = self.coords(idx);
        self.origin + DVec2::new(i as f64 + 0.5, j as f64 + 0.5) * self.resolution
    }

    /// Cell containing `p`, if inside the grid.
    #[inline]
    pub fn cell_of(&self, p: DVec2) -> Option<usize> {
        let q = (p - self.origin) / self.resolution;
        if q.x < 0.0 || q.y < 0.0 {
            return None;
        }
        let (i, j) = (q.x as usize, q.y as usize);
        (i < self.nx && j < self.ny).then(|| self.index(i, j))
    }

    /// Neighbor of `idx` shifted by `(di, dj)`, if inside the grid.
    #[inline]
    pub fn offset(&self, idx: usize, di: isize, dj: isize) -> Option<usize> {
        let (i, j) = self.coords(idx);
        let ni = i as isize + di;
        let nj = j as isize + dj;
        if ni < 0 || nj < 0 || ni >= self.nx as isize || nj >= self.ny as isize {
            None
        } else {
            Some(self.index(ni as usize, nj as usize))
        }
    }

    /// Walkable 8-neighbor without cutting a blocked corner.
    #[inline]
    pub fn step_allowed(&self, idx: usize, di: isize, dj: isize) -> Option<usize> {
        let n = self.offset(idx, di, dj)?;
        if !self.walkable[n] {
            return None;
        }
        if di != 0 && dj != 0 {
            let a = self.offset(idx, di, 0)?;
            let b = self.offset(idx, 0, dj)?;
            if !self.walkable[a] || !self.walkable[b] {
                return None;
            }
        }
        Some(n)
    }

    /// Walkable cells whose centers lie inside `region`.
    pub fn cells_in(&self, region: &Polygon) -> Vec<usize> {
        let (lo, hi) = region.bbox();
        let mut out = Vec::new();
        let i0 = (((lo.x - self.origin.x) / self.resolution).floor().max(0.0)) as usize;
        let j0 = (((lo.y - self.origin.y) / self.resolution).floor().max(0.0)) as usize;
        let i1 = ((((hi.x - self.origin.x) / self.resolution).ceil()) as usize).min(self.nx);
        let j1 = ((((hi.y - self.origin.y) / self.resolution).ceil()) as usize).min(self.ny);
        for j in j0..j1 {
            for i in i0..i1 {
                let idx = self.index(i, j);
                if self.walkable[idx] && region.contains(self.center(idx)) {
                    out.push(idx);
                }
            }
        }
        out
    }

    /// 4-connected flood fill over walkable cells.
    pub fn reachable_from(&self, seeds: &[usize]) -> Vec<bool> {
        let mut seen = vec![false; self.len()];
        let mut queue: VecDeque<usize> = VecDeque::new();
        for &s in seeds {
            if self.walkable[s] && !seen[s] {
                seen[s] = true;
                queue.push_back(s);
            }
        }
        while let Some(c) = queue.pop_front() {
            for (di, dj) in NEIGHBORS_4 {
                if let Some(n) = self.offset(c, di, dj) {
                    if self.walkable[n] && !seen[n] {
                        seen[n] = true;
                        queue.push_back(n);
                    }
                }
            }
        }
        seen
    }
}

/// Rasterizes the geometry and checks that origin and destination stay connected.
pub fn rasterize(geometry: &WalkingGeometry, resolution: f64) -> Result<OccupancyGrid, GeometryError> {
    let grid = OccupancyGrid::from_geometry(geometry, resolution)?;
    let origin = grid.cells_in(&geometry.origin);
    let destination = grid.cells_in(&geometry.destination);
    if origin.is_empty() {
        return Err(GeometryError::Disconnected(format!(
            "origin region covers no walkable cell at {resolution} m"
        )));
    }
    if destination.is_empty() {
        return Err(GeometryError::Disconnected(format!(
            "destination region covers no walkable cell at {resolution} m"
        )));
    }
    let seen = grid.reachable_from(&origin);
    if !destination.iter().any(|&d| seen[d]) {
        return Err(GeometryError::Disconnected(format!(
            "no walkable connection from origin to destination at {resolution} m"
        )));
    }
    Ok(grid)
}
