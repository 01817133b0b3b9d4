#![allow(dead_code)]

use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed};

/// Fixed-seed config so failures reproduce across machines.
pub fn config(cases: u32, seed: u64) -> Config {
    Config {
        cases,
        rng_seed: RngSeed::Fixed(seed),
        failure_persistence: None,
        ..Config::default()
    }
}

/// Small integer coefficient matrix, per-site budgets and a noise subset of
/// rows `1..K` (row 0 is the signal).
#[derive(Debug, Clone)]
pub struct IntScenario {
    pub rows: Vec<Vec<f64>>,
    pub bounds: Vec<u32>,
    pub noise: Vec<usize>,
}

pub fn int_scenario(
    max_sites: usize,
    max_rows: usize,
    max_n: u32,
) -> impl Strategy<Value = IntScenario> {
    (2..=max_sites, 2..=max_rows).prop_flat_map(move |(j, k)| {
        (
            prop::collection::vec(prop::collection::vec(-3i32..=3, j), k),
            prop::collection::vec(0..=max_n, j),
            prop::collection::vec(any::<bool>(), k - 1),
        )
            .prop_map(|(rows, bounds, mask)| IntScenario {
                rows: rows
                    .into_iter()
                    .map(|r| r.into_iter().map(f64::from).collect())
                    .collect(),
                bounds,
                noise: mask
                    .iter()
                    .enumerate()
                    .filter_map(|(i, &m)| m.then_some(i + 1))
                    .collect(),
            })
    })
}

/// Real-valued version for the continuous program.
#[derive(Debug, Clone)]
pub struct RealScenario {
    pub rows: Vec<Vec<f64>>,
    pub bounds: Vec<f64>,
    pub noise: Vec<usize>,
}

pub fn real_scenario(max_sites: usize, max_rows: usize) -> impl Strategy<Value = RealScenario> {
    (2..=max_sites, 2..=max_rows).prop_flat_map(|(j, k)| {
        (
            prop::collection::vec(prop::collection::vec(-2.0f64..2.0, j), k),
            prop::collection::vec(0.0f64..3.0, j),
            prop::collection::vec(any::<bool>(), k - 1),
        )
            .prop_map(|(rows, bounds, mask)| RealScenario {
                rows,
                bounds,
                noise: mask
                    .iter()
                    .enumerate()
                    .filter_map(|(i, &m)| m.then_some(i + 1))
                    .collect(),
            })
    })
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Maximum of `f . s` over `{ s : A s = 0, |s_j| <= b_j }` by enumerating
/// vertices: pick `rank(A)` free coordinates, pin the rest to a bound, solve.
pub fn lp_max_by_vertices(f: &[f64], a: &[Vec<f64>], b: &[f64]) -> f64 {
    use nalgebra::{DMatrix, DVector};
    let j = f.len();
    // Independent subset of the constraint rows.
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for row in a {
        let mut trial = rows.clone();
        trial.push(row.clone());
        let m = DMatrix::from_fn(trial.len(), j, |r, c| trial[r][c]);
        if m.rank(1e-9 * (1.0 + m.abs().max())) == trial.len() {
            rows = trial;
        }
    }
    let r = rows.len();
    let mut best = f64::NEG_INFINITY;
    for free_mask in 0u32..(1 << j) {
        if free_mask.count_ones() as usize != r {
            continue;
        }
        let free: Vec<usize> = (0..j).filter(|c| free_mask >> c & 1 == 1).collect();
        let pinned: Vec<usize> = (0..j).filter(|c| free_mask >> c & 1 == 0).collect();
        let m = DMatrix::from_fn(r, r, |i, c| rows[i][free[c]]);
        let Some(inv) = m.clone().try_inverse() else {
            continue;
        };
        if r > 0 && m.determinant().abs() < 1e-10 {
            continue;
        }
        for signs in 0u32..(1 << pinned.len()) {
            let mut s = vec![0.0; j];
            for (t, &c) in pinned.iter().enumerate() {
                s[c] = if signs >> t & 1 == 1 { b[c] } else { -b[c] };
            }
            if r > 0 {
                let rhs = DVector::from_fn(r, |i, _| {
                    -pinned.iter().map(|&c| rows[i][c] * s[c]).sum::<f64>()
                });
                let x = &inv * rhs;
                for (t, &c) in free.iter().enumerate() {
                    s[c] = x[t];
                }
            }
            if s.iter().zip(b).all(|(x, bound)| x.abs() <= bound + 1e-9) {
                best = best.max(dot(f, &s));
            }
        }
    }
    best
}
