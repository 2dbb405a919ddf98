//! Independent reference computations shared by the integration tests.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Edge list in canonical order, recomputed from scratch.
pub fn pairs(v: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for j in 0..v {
        for i in j + 1..v {
            out.push((i, j));
        }
    }
    out
}

/// Kronecker Laplacian assembled entry by entry from its definition.
pub fn kron_laplacian_reference(w: &DVector<f64>, v: usize, n: usize) -> DMatrix<f64> {
    let mut l = DMatrix::zeros(v * n, v * n);
    for (k, (i, j)) in pairs(v).into_iter().enumerate() {
        for a in 0..n {
            l[(i * n + a, j * n + a)] -= w[k];
            l[(j * n + a, i * n + a)] -= w[k];
            l[(i * n + a, i * n + a)] += w[k];
            l[(j * n + a, j * n + a)] += w[k];
        }
    }
    l
}

pub fn random_symmetric(d: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let a = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
    (&a + a.transpose()) * 0.5
}

pub fn random_psd(d: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let a = DMatrix::from_fn(d, d + 2, |_, _| rng.random_range(-1.0..1.0));
    &a * a.transpose() / d as f64
}

/// Central finite differences of a scalar function of a matrix.
pub fn finite_difference<F: Fn(&DMatrix<f64>) -> f64>(f: F, x: &DMatrix<f64>, h: f64) -> DMatrix<f64> {
    DMatrix::from_fn(x.nrows(), x.ncols(), |a, b| {
        let mut plus = x.clone();
        plus[(a, b)] += h;
        let mut minus = x.clone();
        minus[(a, b)] -= h;
        (f(&plus) - f(&minus)) / (2.0 * h)
    })
}

/// Minimizes `sum_i [-n ln x_i - beta t_i x_i + beta n x_i^2 / 2]` over
/// `c1 <= x_1 <= ... <= x_m <= c2` by dynamic programming on per-coordinate
/// grids, refined around the incumbent with a halving spacing.
pub fn isotonic_grid_oracle(traces: &[f64], n: usize, beta: f64, c1: f64, c2: f64) -> Vec<f64> {
    let nf = n as f64;
    let cost = |i: usize, x: f64| -nf * x.ln() - beta * traces[i] * x + 0.5 * beta * nf * x * x;
    let m = traces.len();
    let coarse = 400;
    let common: Vec<f64> = (0..=coarse).map(|k| c1 + (c2 - c1) * k as f64 / coarse as f64).collect();
    let mut grids: Vec<Vec<f64>> = vec![common; m];
    let mut h = (c2 - c1) / coarse as f64;
    let mut best = solve_on_grids(&grids, &cost);
    while h > 1e-9 {
        h *= 0.5;
        grids = best
            .iter()
            .map(|&x| {
                let mut g: Vec<f64> = (-8..=8).map(|s| (x + s as f64 * h).clamp(c1, c2)).collect();
                g.dedup();
                g
            })
            .collect();
        best = solve_on_grids(&grids, &cost);
    }
    best
}

fn solve_on_grids<F: Fn(usize, f64) -> f64>(grids: &[Vec<f64>], cost: &F) -> Vec<f64> {
    let m = grids.len();
    // value[i][k]: best cost of coordinates 0..=i with x_i = grids[i][k]
    let mut value: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut arg: Vec<Vec<usize>> = Vec::with_capacity(m);
    value.push(grids[0].iter().map(|&x| cost(0, x)).collect());
    arg.push(vec![0; grids[0].len()]);
    for i in 1..m {
        let prev = &grids[i - 1];
        let prev_val = &value[i - 1];
        let mut vals = Vec::with_capacity(grids[i].len());
        let mut args = Vec::with_capacity(grids[i].len());
        for &x in &grids[i] {
            let mut best = (f64::INFINITY, usize::MAX);
            for (k, &y) in prev.iter().enumerate() {
                if y <= x + 1e-15 && prev_val[k] < best.0 {
                    best = (prev_val[k], k);
                }
            }
            vals.push(best.0 + cost(i, x));
            args.push(best.1);
        }
        value.push(vals);
        arg.push(args);
    }
    let last = &value[m - 1];
    let mut k = (0..last.len()).min_by(|a, b| last[*a].total_cmp(&last[*b])).unwrap();
    let mut out = vec![0.0; m];
    for i in (0..m).rev() {
        out[i] = grids[i][k];
        if i > 0 {
            k = arg[i][k];
        }
    }
    out
}

/// `(1/T) int_0^T ||exp(-tA) - exp(-tB)||_F^2 dt` by composite Simpson on a
/// uniform grid near zero and a geometric grid beyond.
pub fn heat_quadrature(a: &DMatrix<f64>, b: &DMatrix<f64>, horizon: f64) -> f64 {
    let ea = a.clone().symmetric_eigen();
    let eb = b.clone().symmetric_eigen();
    let heat = |e: &nalgebra::SymmetricEigen<f64, nalgebra::Dyn>, t: f64| {
        let d = DMatrix::from_diagonal(&e.eigenvalues.map(|x| (-t * x.max(0.0)).exp()));
        &e.eigenvectors * d * e.eigenvectors.transpose()
    };
    let f = |t: f64| (heat(&ea, t) - heat(&eb, t)).norm_squared();
    let simpson = |lo: f64, hi: f64| (hi - lo) / 6.0 * (f(lo) + 4.0 * f(0.5 * (lo + hi)) + f(hi));
    let mut total = 0.0;
    let split = 2.0;
    let uniform = 400;
    for k in 0..uniform {
        total += simpson(split * k as f64 / uniform as f64, split * (k + 1) as f64 / uniform as f64);
    }
    let segments = 3000;
    let ratio = (horizon / split).powf(1.0 / segments as f64);
    let mut lo = split;
    for _ in 0..segments {
        let hi = lo * ratio;
        total += simpson(lo, hi);
        lo = hi;
    }
    total / horizon
}
