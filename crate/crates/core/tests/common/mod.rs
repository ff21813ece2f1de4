//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use pedassign::assign::AffineLatency;

/// Affine test networks: (latencies, demand).
pub fn networks() -> Vec<(Vec<AffineLatency>, f64)> {
    let l = |v: &[(f64, f64)]| v.iter().map(|&(free, slope)| AffineLatency { free, slope }).collect();
    vec![
        (l(&[(60.0, 40.0), (70.0, 20.0)]), 1.0),
        (l(&[(50.0, 10.0), (100.0, 10.0)]), 1.0),
        (l(&[(40.0, 10.0), (45.0, 20.0), (50.0, 30.0)]), 3.0),
        (l(&[(30.0, 8.0), (32.0, 12.0), (35.0, 10.0), (38.0, 20.0)]), 2.0),
        (l(&[(20.0, 5.0), (22.0, 5.0), (25.0, 10.0), (60.0, 5.0)]), 1.5),
    ]
}

/// Wardrop split for strictly increasing affine latencies: fill routes in order of
/// free-flow time until the common travel time stops undercutting the next one.
pub fn closed_form_split(lat: &[AffineLatency], demand: f64) -> Vec<f64> {
    let mut order: Vec<usize> = (0..lat.len()).collect();
    order.sort_by(|&a, &b| lat[a].free.total_cmp(&lat[b].free));
    let mut p = vec![0.0; lat.len()];
    for k in 1..=order.len() {
        let active = &order[..k];
        let inv: f64 = active.iter().map(|&i| 1.0 / lat[i].slope).sum();
        let t = (demand + active.iter().map(|&i| lat[i].free / lat[i].slope).sum::<f64>()) / inv;
        let next_free = order.get(k).map_or(f64::INFINITY, |&i| lat[i].free);
        if t <= next_free {
            for &i in active {
                p[i] = (t - lat[i].free) / lat[i].slope / demand;
            }
            return p;
        }
    }
    unreachable!()
}

fn beckmann(lat: &[AffineLatency], x: &[f64]) -> f64 {
    lat.iter().zip(x).map(|(l, &x)| l.free * x + 0.5 * l.slope * x * x).sum()
}

/// Grid step of [`brute_force_split`] for `n` routes.
pub fn brute_force_step(n: usize) -> f64 {
    1.0 / steps(n) as f64
}

/// Largest per-coordinate step count that keeps the simplex grid near 10,000 points.
fn steps(n: usize) -> usize {
    let count = |m: usize| -> usize {
        // compositions of m into n non-negative parts
        let (mut num, mut den) = (1usize, 1usize);
        for k in 1..n {
            num *= m + k;
            den *= k;
        }
        num / den
    };
    (1..).take_while(|&m| count(m) <= 10_000).last().unwrap()
}

/// Minimizes the Beckmann potential over a grid of about 10,000 splits.
pub fn brute_force_split(lat: &[AffineLatency], demand: f64) -> Vec<f64> {
    let n = lat.len();
    let m = steps(n);
    let mut best = (f64::INFINITY, vec![]);
    let mut parts = vec![0usize; n];
    fn visit(k: usize, left: usize, parts: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if k + 1 == parts.len() {
            parts[k] = left;
            f(parts);
            return;
        }
        for v in 0..=left {
            parts[k] = v;
            visit(k + 1, left - v, parts, f);
        }
    }
    visit(0, m, &mut parts, &mut |parts| {
        let p: Vec<f64> = parts.iter().map(|&v| v as f64 / m as f64).collect();
        let x: Vec<f64> = p.iter().map(|p| p * demand).collect();
        let z = beckmann(lat, &x);
        if z < best.0 {
            best = (z, p);
        }
    });
    best.1
}
