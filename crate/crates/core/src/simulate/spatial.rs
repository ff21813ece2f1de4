//! Uniform hash grid for neighbor queries.

use glam::DVec2;

/// Buckets points into square cells. Rebuilt every step; iteration order within a
/// query is fixed by cell order and insertion order.
#[derive(Debug, Clone)]
pub struct SpatialHash {
    origin: DVec2,
    cell: f64,
    nx: usize,
    ny: usize,
    starts: Vec<u32>,
    items: Vec<u32>,
}

impl SpatialHash {
    /// Covers the box `[lo, hi]` with cells of side `cell`.
    pub fn new(lo: DVec2, hi: DVec2, cell: f64) -> Self {
        let nx = (((hi.x - lo.x) / cell).ceil() as usize).max(1);
        let ny = (((hi.y - lo.y) / cell).ceil() as usize).max(1);
        Self {
            origin: lo,
            cell,
            nx,
            ny,
            starts: vec![0; nx * ny + 1],
            items: Vec::new(),
        }
    }

    #[inline]
    fn cell_coords(&self, p: DVec2) -> (usize, usize) {
        let q = (p - self.origin) / self.cell;
        let i = (q.x.max(0.0) as usize).min(self.nx - 1);
        let j = (q.y.max(0.0) as usize).min(self.ny - 1);
        (i, j)
    }

    /// Replaces the contents with `points`, indexed by position in the slice.
    pub fn rebuild(&mut self, points: impl Iterator<Item = DVec2>) {
        let cells: Vec<usize> = points
            .map(|p| {
                let (i, j) = self.cell_coords(p);
                j * self.nx + i
            })
            .collect();
        self.starts.iter_mut().for_each(|s| *s = 0);
        for &c in &cells {
            self.starts[c + 1] += 1;
        }
        for k in 1..self.starts.len() {
            self.starts[k] += self.starts[k - 1];
        }
        let mut fill = self.starts.clone();
        self.items.clear();
        self.items.resize(cells.len(), 0);
        for (idx, &c) in cells.iter().enumerate() {
            self.items[fill[c] as usize] = idx as u32;
            fill[c] += 1;
        }
    }

    /// Calls `f` with every stored index whose cell overlaps the disc of `radius`
    /// around `p`. Candidates still need an exact distance check.
    pub fn for_each_near(&self, p: DVec2, radius: f64, mut f: impl FnMut(usize)) {
        let (i0, j0) = self.cell_coords(p - DVec2::splat(radius));
        let (i1, j1) = self.cell_coords(p + DVec2::splat(radius));
        for j in j0..=j1 {
            for i in i0..=i1 {
                let c = j * self.nx + i;
                for &k in &self.items[self.starts[c] as usize..self.starts[c + 1] as usize] {
                    f(k as usize);
                }
            }
        }
    }
}
