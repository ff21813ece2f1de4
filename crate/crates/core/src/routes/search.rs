//! Shortest representatives per homotopy class.
//!
//! Dijkstra over (cell, signature) states on a 16-connected grid. Every move that
//! crosses a cut extends the state's signature; signatures that wind around an
//! obstacle are dropped. The first arrival in the destination for each signature is
//! the shortest representative of that class.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use glam::DVec2;

use super::signature::{Crossing, Cuts, HomotopySignature};
use crate::geometry::{OccupancyGrid, Segment, WalkingGeometry};

const MOVES: [(isize, isize); 16] = [
    (1, 0),
    (-1, 0),
    (0, 1),
    (0, -1),
    (1, 1),
    (1, -1),
    (-1, 1),
    (-1, -1),
    (2, 1),
    (2, -1),
    (-2, 1),
    (-2, -1),
    (1, 2),
    (-1, 2),
    (1, -2),
    (-1, -2),
];

/// Upper bound on distinct signatures explored.
const MAX_WORDS: usize = 256;

#[derive(Debug, Clone)]
pub struct Representative {
    pub signature: HomotopySignature,
    pub length: f64,
    pub path: Vec<DVec2>,
}

#[derive(Clone, Copy)]
struct State {
    dist: f64,
    word: u32,
    cell: u32,
}

impl PartialEq for State {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for State {}
impl PartialOrd for State {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for State {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.word.cmp(&self.word))
            .then_with(|| other.cell.cmp(&self.cell))
    }
}

struct Words {
    words: Vec<HomotopySignature>,
    index: HashMap<HomotopySignature, u32>,
    transitions: HashMap<(u32, Crossing), Option<u32>>,
}

impl Words {
    fn new() -> Self {
        let empty = HomotopySignature::new();
        let mut index = HashMap::new();
        index.insert(empty.clone(), 0);
        Self {
            words: vec![empty],
            index,
            transitions: HashMap::new(),
        }
    }

    fn extend(&mut self, word: u32, c: Crossing) -> Option<u32> {
        if let Some(t) = self.transitions.get(&(word, c)) {
            return *t;
        }
        let mut next = self.words[word as usize].clone();
        next.push(c);
        let result = if !next.is_loop_free() {
            None
        } else if let Some(&id) = self.index.get(&next) {
            Some(id)
        } else if self.words.len() >= MAX_WORDS {
            None
        } else {
            let id = self.words.len() as u32;
            self.index.insert(next.clone(), id);
            self.words.push(next);
            Some(id)
        };
        self.transitions.insert((word, c), result);
        result
    }
}

fn move_allowed(grid: &OccupancyGrid, cell: usize, di: isize, dj: isize) -> Option<usize> {
    if di.abs() <= 1 && dj.abs() <= 1 {
        return grid.step_allowed(cell, di, dj);
    }
    let target = grid.offset(cell, di, dj)?;
    if !grid.is_walkable(target) {
        return None;
    }
    // both cells straddling the knight move must be free
    let (a, b) = if di.abs() == 2 {
        ((di / 2, 0), (di / 2, dj))
    } else {
        ((0, dj / 2), (di, dj / 2))
    };
    let ca = grid.offset(cell, a.0, a.1)?;
    let cb = grid.offset(cell, b.0, b.1)?;
    (grid.is_walkable(ca) && grid.is_walkable(cb)).then_some(target)
}

/// Shortest representative of every loop-free class whose length is within
/// `max_detour_factor` of the overall shortest. Sorted by length, then signature.
pub fn representatives(
    geometry: &WalkingGeometry,
    grid: &OccupancyGrid,
    cuts: &Cuts,
    max_detour_factor: f64,
) -> Vec<Representative> {
    let n = grid.len();
    let origin = grid.cells_in(&geometry.origin);
    let mut in_destination = vec![false; n];
    for c in grid.cells_in(&geometry.destination) {
        in_destination[c] = true;
    }
    let mut words = Words::new();
    let mut dist: Vec<Vec<f64>> = vec![vec![f64::INFINITY; n]];
    let mut prev: Vec<Vec<u64>> = vec![vec![u64::MAX; n]];
    let mut heap = BinaryHeap::new();
    for &c in &origin {
        dist[0][c] = 0.0;
        heap.push(State {
            dist: 0.0,
            word: 0,
            cell: c as u32,
        });
    }
    let mut arrivals: Vec<(u32, usize, f64)> = Vec::new();
    let mut arrived: Vec<bool> = vec![false];
    let mut bound = f64::INFINITY;

    while let Some(State { dist: d, word, cell }) = heap.pop() {
        let (w, c) = (word as usize, cell as usize);
        if d > dist[w][c] {
            continue;
        }
        if d > bound {
            break;
        }
        if in_destination[c] {
            if !arrived[w] {
                arrived[w] = true;
                arrivals.push((word, c, d));
                if bound.is_infinite() {
                    bound = d * max_detour_factor + 1e-9;
                }
            }
            continue;
        }
        let here = grid.center(c);
        for (di, dj) in MOVES {
            let Some(m) = move_allowed(grid, c, di, dj) else {
                continue;
            };
            let there = grid.center(m);
            let mut next_word = Some(word);
            for crossing in cuts.crossings(here, there) {
                next_word = next_word.and_then(|nw| words.extend(nw, crossing));
            }
            let Some(nw) = next_word else {
                continue;
            };
            let nwi = nw as usize;
            while dist.len() <= nwi {
                dist.push(vec![f64::INFINITY; n]);
                prev.push(vec![u64::MAX; n]);
                arrived.push(false);
            }
            let nd = d + here.distance(there);
            if nd < dist[nwi][m] {
                dist[nwi][m] = nd;
                prev[nwi][m] = (word as u64) << 32 | cell as u64;
                heap.push(State {
                    dist: nd,
                    word: nw,
                    cell: m as u32,
                });
            }
        }
    }

    let mut out: Vec<Representative> = arrivals
        .into_iter()
        .map(|(word, cell, length)| {
            let mut path = Vec::new();
            let (mut w, mut c) = (word as usize, cell);
            loop {
                path.push(grid.center(c));
                let p = prev[w][c];
                if p == u64::MAX {
                    break;
                }
                w = (p >> 32) as usize;
                c = (p & 0xffff_ffff) as usize;
            }
            path.reverse();
            Representative {
                signature: words.words[word as usize].clone(),
                length,
                path,
            }
        })
        .filter(|r| !self_intersects(&r.path))
        .collect();
    out.sort_by(|a, b| {
        a.length
            .total_cmp(&b.length)
            .then_with(|| a.signature.cmp(&b.signature))
    });
    out
}

/// True if the polyline revisits a point or two non-adjacent segments cross.
pub fn self_intersects(path: &[DVec2]) -> bool {
    let mut keys: Vec<(i64, i64)> = path
        .iter()
        .map(|p| ((p.x * 1e6).round() as i64, (p.y * 1e6).round() as i64))
        .collect();
    keys.sort_unstable();
    if keys.windows(2).any(|w| w[0] == w[1]) {
        return true;
    }
    let segs: Vec<Segment> = path.windows(2).map(|w| Segment::new(w[0], w[1])).collect();
    for i in 0..segs.len() {
        for j in i + 2..segs.len() {
            if segs[i].crosses_properly(&segs[j]) {
                return true;
            }
        }
    }
    false
}
