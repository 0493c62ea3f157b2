//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use gesture_gate::dtw::VectorSeries;
use gesture_gate::hmm::{HmmModel, Topology};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Best `(cost, length)` over every monotone alignment path, visited by
/// explicit depth-first enumeration. Lower cost wins, then shorter length.
pub fn brute_force_dtw(x: &VectorSeries, y: &VectorSeries) -> (f64, usize) {
    fn walk(
        x: &VectorSeries,
        y: &VectorSeries,
        i: usize,
        j: usize,
        cost: f64,
        len: usize,
        best: &mut (f64, usize),
    ) {
        let cost = cost + dist(x.row(i), y.row(j));
        let len = len + 1;
        if i + 1 == x.len() && j + 1 == y.len() {
            if cost < best.0 || (cost == best.0 && len < best.1) {
                *best = (cost, len);
            }
            return;
        }
        if i + 1 < x.len() {
            walk(x, y, i + 1, j, cost, len, best);
        }
        if j + 1 < y.len() {
            walk(x, y, i, j + 1, cost, len, best);
        }
        if i + 1 < x.len() && j + 1 < y.len() {
            walk(x, y, i + 1, j + 1, cost, len, best);
        }
    }
    let mut best = (f64::INFINITY, usize::MAX);
    walk(x, y, 0, 0, 0.0, 0, &mut best);
    best
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for k in 0..a.len() {
        s += (a[k] - b[k]).powi(2);
    }
    s.sqrt()
}

/// Observation probability by summing over all `N^T` state paths.
pub fn enumerate_likelihood(model: &HmmModel, obs: &[usize]) -> f64 {
    let n = model.n_states();
    let t_len = obs.len();
    let mut total = 0.0;
    let mut path = vec![0usize; t_len];
    loop {
        let mut p = model.initial()[path[0]] * model.b(path[0], obs[0]);
        for t in 1..t_len {
            p *= model.a(path[t - 1], path[t]) * model.b(path[t], obs[t]);
        }
        total += p;
        // odometer increment
        let mut k = 0;
        loop {
            if k == t_len {
                return total;
            }
            path[k] += 1;
            if path[k] < n {
                break;
            }
            path[k] = 0;
            k += 1;
        }
    }
}

fn random_row(rng: &mut ChaCha8Rng, len: usize, allowed: impl Fn(usize) -> bool) -> Vec<f64> {
    let mut row: Vec<f64> = (0..len)
        .map(|k| if allowed(k) { rng.random_range(0.05..1.0) } else { 0.0 })
        .collect();
    let s: f64 = row.iter().sum();
    row.iter_mut().for_each(|v| *v /= s);
    row
}

/// A random fully specified model, independent of the library's initializer.
pub fn random_model(rng: &mut ChaCha8Rng, n: usize, m: usize, topology: Topology) -> HmmModel {
    let initial = random_row(rng, n, |i| topology.allows_start(i));
    let transition = (0..n)
        .flat_map(|i| random_row(rng, n, |j| topology.allows(i, j)))
        .collect();
    let emission = (0..n).flat_map(|_| random_row(rng, m, |_| true)).collect();
    HmmModel::new(n, m, topology, initial, transition, emission).expect("valid random model")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_series(rng: &mut ChaCha8Rng, len: usize, dim: usize) -> VectorSeries {
    VectorSeries::new(dim, (0..len * dim).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap()
}

/// Rows sum to one within `tol` and no entry is negative.
pub fn is_row_stochastic(values: &[f64], row_len: usize, tol: f64) -> bool {
    values
        .chunks(row_len)
        .all(|r| r.iter().all(|&v| v >= 0.0) && (r.iter().sum::<f64>() - 1.0).abs() <= tol)
}
