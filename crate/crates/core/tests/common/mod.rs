//! Brute-force oracles shared by the integration tests. Each one enumerates
//! the defining tuples directly and shares no code with the library.

#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::{Rng, RngExt};
use sumprod::GridSet;

pub fn set(m: u32, cells: impl IntoIterator<Item = i64>) -> GridSet {
    GridSet::from_cells(m, cells).unwrap()
}

/// Up to `max` distinct cells drawn from `lo..hi`.
pub fn random_cells<R: Rng>(rng: &mut R, lo: i64, hi: i64, max: usize) -> Vec<i64> {
    let n = rng.random_range(1..=max);
    let mut out = BTreeSet::new();
    for _ in 0..n {
        out.insert(rng.random_range(lo..hi));
    }
    out.into_iter().collect()
}

pub fn random_set<R: Rng>(rng: &mut R, m: u32, lo: i64, hi: i64, max: usize) -> GridSet {
    set(m, random_cells(rng, lo, hi, max))
}

fn combine(x: i64, y: i64, sum: bool) -> i64 {
    if sum {
        x + y
    } else {
        x - y
    }
}

/// `#{(a, b) : |a ∘ b − z| ≤ w}`.
pub fn window_count(a: &[i64], b: &[i64], z: i64, w: u64, sum: bool) -> u64 {
    let mut n = 0;
    for &x in a {
        for &y in b {
            if combine(x, y, sum).abs_diff(z) <= w {
                n += 1;
            }
        }
    }
    n
}

/// `Σ_z r(z)^k` over every lattice point that can be hit.
pub fn energy(a: &[i64], b: &[i64], k: u32, w: u64, sum: bool) -> u128 {
    let values: Vec<i64> = a
        .iter()
        .flat_map(|&x| b.iter().map(move |&y| combine(x, y, sum)))
        .collect();
    let lo = values.iter().min().unwrap() - w as i64;
    let hi = values.iter().max().unwrap() + w as i64;
    (lo..=hi).map(|z| (window_count(a, b, z, w, sum) as u128).pow(k)).sum()
}

pub fn quadruples(a: &[i64], b: &[i64], w: u64, sum: bool) -> u128 {
    let mut n = 0u128;
    for &x in a {
        for &y in b {
            for &x2 in a {
                for &y2 in b {
                    if combine(x, y, sum).abs_diff(combine(x2, y2, sum)) <= w {
                        n += 1;
                    }
                }
            }
        }
    }
    n
}

/// `#{(a, b, c) : |c − (a − b)| ≤ w}`.
pub fn representations(a: &[i64], b: &[i64], c: &[i64], w: u64) -> u64 {
    let mut n = 0;
    for &x in a {
        for &y in b {
            for &z in c {
                if z.abs_diff(x - y) <= w {
                    n += 1;
                }
            }
        }
    }
    n
}

/// Whether cell `(x, y)` lies within `width` cells vertically of
/// `y = x/a − b`, tested in exact rational form.
pub fn in_tube(m: u32, width: u64, slope: i64, offset: i64, x: i64, y: i64) -> bool {
    // |y + b − x·2^m/a| ≤ width  ⇔  |(y + b)·a − x·2^m| ≤ width·a
    let lhs = (y as i128 + offset as i128) * slope as i128 - ((x as i128) << m);
    lhs.abs() <= width as i128 * slope as i128
}

/// Incidences between `points` and the tubes over `A × B`, each tube shaded
/// with `{(⌊a·a′/2^m⌋, a′ − b) : a′ ∈ A, a′ − b ∈ N_w(C)}`.
pub fn incidences(m: u32, a: &[i64], b: &[i64], c: &[i64], w: u64, width: u64, points: &[(i64, i64)]) -> u64 {
    let points: BTreeSet<(i64, i64)> = points.iter().copied().collect();
    let mut n = 0;
    for &slope in a {
        for &offset in b {
            let mut shade = BTreeSet::new();
            for &x in a {
                if c.iter().any(|&z| z.abs_diff(x - offset) <= w) {
                    shade.insert(((slope as i128 * x as i128 / (1i128 << m)) as i64, x - offset));
                }
            }
            for &(x, y) in &points {
                if shade.contains(&(x, y)) && in_tube(m, width, slope, offset, x, y) {
                    n += 1;
                }
            }
        }
    }
    n
}

/// Every cost `Σ 2^{-jα}` of a dyadic antichain cover of the points below
/// the cell `(j, index)`; `children` lists the occupied children.
fn cover_costs<K: Copy + Ord>(
    j: u32,
    key: K,
    m: u32,
    alpha: f64,
    points: &[K],
    children: &dyn Fn(K) -> Vec<K>,
    below: &dyn Fn(K, u32, K) -> bool,
) -> Vec<f64> {
    let own = (-(j as f64) * alpha).exp2();
    if j == m {
        return vec![own];
    }
    let mut combos = vec![0.0];
    for child in children(key) {
        if !points.iter().any(|&p| below(p, m - j - 1, child)) {
            continue;
        }
        let sub = cover_costs(j + 1, child, m, alpha, points, children, below);
        combos = combos.iter().flat_map(|&x| sub.iter().map(move |&y| x + y)).collect();
    }
    combos.push(own);
    combos
}

/// Minimum over all dyadic antichain covers, by exhaustive enumeration.
pub fn content_1d(cells: &[i64], m: u32, alpha: f64) -> f64 {
    let roots: BTreeSet<i64> = cells.iter().map(|&c| c >> m).collect();
    let children = |k: i64| vec![2 * k, 2 * k + 1];
    let below = |p: i64, shift: u32, k: i64| p >> shift == k;
    roots
        .into_iter()
        .map(|r| {
            cover_costs(0, r, m, alpha, cells, &children, &below)
                .into_iter()
                .fold(f64::INFINITY, f64::min)
        })
        .sum()
}

pub fn content_2d(cells: &[(i64, i64)], m: u32, alpha: f64) -> f64 {
    let roots: BTreeSet<(i64, i64)> = cells.iter().map(|&(x, y)| (x >> m, y >> m)).collect();
    let children = |(x, y): (i64, i64)| {
        vec![
            (2 * x, 2 * y),
            (2 * x, 2 * y + 1),
            (2 * x + 1, 2 * y),
            (2 * x + 1, 2 * y + 1),
        ]
    };
    let below = |(px, py): (i64, i64), shift: u32, (x, y): (i64, i64)| px >> shift == x && py >> shift == y;
    roots
        .into_iter()
        .map(|r| {
            cover_costs(0, r, m, alpha, cells, &children, &below)
                .into_iter()
                .fold(f64::INFINITY, f64::min)
        })
        .sum()
}
