//! ε-uniform sets: the step equation, the uniformity predicate, extraction
//! of a large uniform subset and partition into uniform pieces.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{DyadicCell, GridSet};

/// Real root of `log₂(2T)/T = ε` on the decreasing branch `T ≥ e/2`.
///
/// Accepts `0 < ε ≤ 1`; the root is bisected to absolute error `1e-9`.
pub fn solve_t_eps(eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::invalid(format!("ε = {eps} outside (0, 1]")));
    }
    let f = |t: f64| (2.0 * t).log2() / t;
    let mut lo = std::f64::consts::E / 2.0;
    let mut hi = 2.0;
    while f(hi) > eps {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > eps {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Smallest divisor of `m` that is at least `root`, or `m` itself when
/// there is none.
pub fn step_for_scale(root: f64, m: u32) -> u32 {
    (1..=m).find(|&t| m % t == 0 && t as f64 >= root).unwrap_or(m.max(1))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformityParams {
    pub eps: f64,
    /// Ladder step `T`; the ladder is `0, T, 2T, …, m`.
    pub step: u32,
    pub m: u32,
    /// Comparability factor `F`: counts at a ladder level lie in `[R, F·R)`.
    pub comparability: u64,
}

impl UniformityParams {
    /// Step chosen from `ε` by the divisor rule, `F = 2`.
    pub fn for_eps(eps: f64, m: u32) -> Result<Self> {
        let root = solve_t_eps(eps)?;
        Self::with_step(eps, m, step_for_scale(root, m))
    }

    pub fn with_step(eps: f64, m: u32, step: u32) -> Result<Self> {
        if m == 0 || step == 0 || m % step != 0 {
            return Err(Error::invalid(format!(
                "step T = {step} must be ≥ 1 and divide m = {m}"
            )));
        }
        Ok(Self {
            eps,
            step,
            m,
            comparability: 2,
        })
    }

    pub fn levels(&self) -> u32 {
        self.m / self.step
    }

    fn ladder(&self) -> impl Iterator<Item = u32> + '_ {
        (0..=self.levels()).map(|k| k * self.step)
    }
}

/// `(cell index, #(A ∩ cell))` for every nonempty level-`j` cell, in order.
pub fn cell_counts(a: &GridSet, j: u32) -> Vec<(i64, u64)> {
    counts_at(a.cells(), a.m(), j)
}

fn counts_at(cells: &[i64], m: u32, j: u32) -> Vec<(i64, u64)> {
    let shift = m - j;
    let mut out: Vec<(i64, u64)> = Vec::new();
    for &c in cells {
        let p = c >> shift;
        match out.last_mut() {
            Some((q, n)) if *q == p => *n += 1,
            _ => out.push((p, 1)),
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelCertificate {
    pub level: u32,
    /// Smallest count `R_j` of a nonempty level-`j` cell.
    pub branching: u64,
    pub max_count: u64,
    /// `⌊log₂ R_j⌋`.
    pub class: u32,
    pub cells: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformCertificate {
    pub step: u32,
    pub comparability: u64,
    pub levels: Vec<LevelCertificate>,
    /// Size of the certified set relative to the set it was extracted from.
    pub retained_fraction: f64,
}

impl UniformCertificate {
    pub fn with_retained(mut self, original: usize) -> Self {
        let kept = self.levels.last().map_or(0, |l| l.cells);
        self.retained_fraction = if original == 0 {
            1.0
        } else {
            kept as f64 / original as f64
        };
        self
    }
}

/// Two nonempty cells at the same ladder level whose counts are not
/// comparable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UniformityWitness {
    pub level: u32,
    pub sparse: DyadicCell,
    pub sparse_count: u64,
    pub dense: DyadicCell,
    pub dense_count: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum UniformityCheck {
    Uniform(UniformCertificate),
    NotUniform(UniformityWitness),
}

impl UniformityCheck {
    pub fn is_uniform(&self) -> bool {
        matches!(self, UniformityCheck::Uniform(_))
    }

    pub fn certificate(&self) -> Option<&UniformCertificate> {
        match self {
            UniformityCheck::Uniform(c) => Some(c),
            UniformityCheck::NotUniform(_) => None,
        }
    }
}

/// Checks that at every ladder level the nonempty cells have counts within
/// the factor `F` (`max < F·min`); the empty set is uniform.
pub fn is_uniform(a: &GridSet, params: &UniformityParams) -> Result<UniformityCheck> {
    if a.m() != params.m {
        return Err(Error::ScaleMismatch {
            left: a.m(),
            right: params.m,
        });
    }
    let mut levels = Vec::new();
    for j in params.ladder() {
        let counts = cell_counts(a, j);
        let Some(&(lo_cell, lo)) = counts.iter().min_by_key(|&&(c, n)| (n, c)) else {
            continue;
        };
        let &(hi_cell, hi) = counts.iter().max_by_key(|&&(c, n)| (n, std::cmp::Reverse(c))).unwrap();
        if hi >= params.comparability.saturating_mul(lo) {
            return Ok(UniformityCheck::NotUniform(UniformityWitness {
                level: j,
                sparse: DyadicCell::new(j, lo_cell),
                sparse_count: lo,
                dense: DyadicCell::new(j, hi_cell),
                dense_count: hi,
            }));
        }
        levels.push(LevelCertificate {
            level: j,
            branching: lo,
            max_count: hi,
            class: lo.ilog2(),
            cells: counts.len(),
        });
    }
    Ok(UniformityCheck::Uniform(UniformCertificate {
        step: params.step,
        comparability: params.comparability,
        levels,
        retained_fraction: 1.0,
    }))
}

/// Largest ratio of nonempty-cell counts at any level `0 ≤ j ≤ m`, ladder
/// or not.
pub fn max_count_ratio(a: &GridSet) -> f64 {
    (0..=a.m())
        .filter_map(|j| {
            let counts = cell_counts(a, j);
            let lo = counts.iter().map(|c| c.1).min()?;
            let hi = counts.iter().map(|c| c.1).max()?;
            Some(hi as f64 / lo as f64)
        })
        .fold(1.0, f64::max)
}

/// Pigeonholes a uniform subset out of `a`.
///
/// Levels are processed from fine to coarse: at `j = m−T, m−2T, …, 0` the
/// surviving level-`j` cells are bucketed by `⌊log₂ count⌋` and only the
/// bucket of largest total mass is kept (ties go to the denser bucket).
/// Discarding whole coarse cells never changes the counts of the finer
/// cells already fixed, so the result is uniform with `F = 2` and keeps at
/// least `#A / (log₂#A + 1)^{m/T}` points.
pub fn extract_uniform(a: &GridSet, params: &UniformityParams) -> Result<GridSet> {
    if a.is_empty() {
        return Err(Error::domain("cannot extract a uniform subset of an empty set"));
    }
    if a.m() != params.m {
        return Err(Error::ScaleMismatch {
            left: a.m(),
            right: params.m,
        });
    }
    let m = params.m;
    let mut cells = a.cells().to_vec();
    for k in (0..params.levels()).rev() {
        let j = k * params.step;
        let counts = counts_at(&cells, m, j);
        let mut mass = [0u64; 64];
        for &(_, n) in &counts {
            mass[n.ilog2() as usize] += n;
        }
        let best = (0..64).max_by_key(|&c| (mass[c], c)).expect("non-empty range") as u32;
        let kept: std::collections::HashSet<i64> = counts
            .iter()
            .filter(|&&(_, n)| n.ilog2() == best)
            .map(|&(p, _)| p)
            .collect();
        if kept.len() < counts.len() {
            let shift = m - j;
            cells.retain(|&c| kept.contains(&(c >> shift)));
        }
    }
    Ok(GridSet::from_sorted_unchecked(m, cells))
}

/// Splits `a` into disjoint uniform sets by repeated extraction from the
/// remainder.
pub fn partition_uniform(a: &GridSet, params: &UniformityParams) -> Result<Vec<GridSet>> {
    let mut parts = Vec::new();
    let mut rest = a.clone();
    while !rest.is_empty() {
        let part = extract_uniform(&rest, params)?;
        rest = rest.difference(&part)?;
        parts.push(part);
    }
    Ok(parts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cantor(m: u32) -> GridSet {
        // base-4 digits {0, 2}, m/2 levels, unshifted
        let levels = m / 2;
        let cells = (0..1u64 << levels).map(|bits| {
            (0..levels).fold(0i64, |acc, k| {
                let d = ((bits >> (levels - 1 - k)) & 1) as i64 * 2;
                acc * 4 + d
            })
        });
        GridSet::from_cells(m, cells).unwrap()
    }

    #[test]
    fn step_equation_roots() {
        assert!((solve_t_eps(1.0).unwrap() - 2.0).abs() < 1e-9);
        assert!((solve_t_eps(0.5).unwrap() - 8.0).abs() < 1e-9);
        let t = solve_t_eps(0.1).unwrap();
        assert!(((2.0 * t).log2() / t - 0.1).abs() < 1e-9);
        assert!((t - 71.6236).abs() < 1e-3);
        assert!(solve_t_eps(0.0).is_err());
        assert!(solve_t_eps(1.5).is_err());
    }

    #[test]
    fn divisor_rule() {
        assert_eq!(step_for_scale(2.0, 12), 2);
        assert_eq!(step_for_scale(4.5, 12), 6);
        assert_eq!(step_for_scale(71.6, 20), 20);
        assert_eq!(UniformityParams::for_eps(0.5, 16).unwrap().step, 8);
        assert!(UniformityParams::with_step(0.1, 12, 5).is_err());
    }

    #[test]
    fn cantor_is_uniform() {
        let p = UniformityParams::with_step(0.1, 8, 2).unwrap();
        let check = is_uniform(&cantor(8), &p).unwrap();
        let cert = check.certificate().expect("uniform");
        let branching: Vec<u64> = cert.levels.iter().map(|l| l.branching).collect();
        assert_eq!(branching, vec![16, 8, 4, 2, 1]);
    }

    #[test]
    fn lopsided_set_fails_at_level_two() {
        let a = GridSet::from_cells(4, std::iter::once(0).chain(8..16)).unwrap();
        let p = UniformityParams::with_step(0.1, 4, 2).unwrap();
        match is_uniform(&a, &p).unwrap() {
            UniformityCheck::NotUniform(w) => {
                assert_eq!(w.level, 2);
                assert_eq!((w.sparse_count, w.dense_count), (1, 4));
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(extract_uniform(&a, &p).unwrap().cells(), (8..16).collect::<Vec<_>>());
    }

    #[test]
    fn uniform_input_is_fixed() {
        let a = cantor(8);
        let p = UniformityParams::with_step(0.1, 8, 2).unwrap();
        assert_eq!(extract_uniform(&a, &p).unwrap(), a);
        assert_eq!(partition_uniform(&a, &p).unwrap(), vec![a]);
    }

    #[test]
    fn two_densities_give_two_parts() {
        let a = GridSet::from_cells(8, (0..64).chain((128..256).step_by(16))).unwrap();
        let p = UniformityParams::with_step(0.1, 8, 4).unwrap();
        let parts = partition_uniform(&a, &p).unwrap();
        assert_eq!(parts.len(), 2);
        for part in &parts {
            assert!(is_uniform(part, &p).unwrap().is_uniform());
        }
        assert!(partition_uniform(&GridSet::empty(8).unwrap(), &p).unwrap().is_empty());
        assert!(extract_uniform(&GridSet::empty(8).unwrap(), &p).is_err());
    }
}
