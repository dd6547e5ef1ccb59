//! Frostman-type regularity, branching profiles, the σ-exponent and dyadic
//! Hausdorff content.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{DyadicCell, DyadicSquare, GridSet, GridSet2D};

/// Which normalization a Frostman condition uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrostmanKind {
    /// `N_δ(A ∩ B(x,r)) ≤ C rˢ N_δ(A)`.
    Set,
    /// Katz–Tao form: `N_δ(A ∩ B(x,r)) ≤ C (r/δ)ˢ`.
    Kt,
}

/// The center and dyadic radius at which the Frostman ratio is largest.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrostmanWitness {
    pub center: i64,
    /// The ball radius is `2^-radius_level`.
    pub radius_level: u32,
    /// Cells of the set inside the closed ball.
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrostmanReport {
    pub s: f64,
    pub kind: FrostmanKind,
    /// Smallest constant for which the condition holds at every scanned
    /// center and dyadic radius.
    pub c_min: f64,
    pub witness: FrostmanWitness,
}

impl FrostmanReport {
    /// `log_{1/δ} C_min` for a set at scale `m`.
    pub fn exponent(&self, m: u32) -> f64 {
        self.c_min.log2() / m as f64
    }
}

fn frostman_ratio(count: usize, total: usize, m: u32, level: u32, s: f64, kind: FrostmanKind) -> f64 {
    match kind {
        FrostmanKind::Kt => count as f64 / ((m - level) as f64 * s).exp2(),
        FrostmanKind::Set => count as f64 * (level as f64 * s).exp2() / total as f64,
    }
}

/// Smallest admissible Frostman constant, scanning every center of `a` and
/// every dyadic radius `δ ≤ r ≤ 1`.
///
/// Ties are broken toward the smallest center, then the smallest radius.
pub fn frostman_constant(a: &GridSet, s: f64, kind: FrostmanKind) -> Result<FrostmanReport> {
    if a.is_empty() {
        return Err(Error::domain("Frostman constant of an empty set"));
    }
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::invalid(format!("exponent s = {s} outside [0, 1]")));
    }
    let m = a.m();
    let total = a.len();
    let best = a
        .cells()
        .par_iter()
        .map(|&x| {
            let mut best: Option<(f64, FrostmanWitness)> = None;
            // smallest radius first so that ties keep the smaller one
            for level in (0..=m).rev() {
                let r = 1i64 << (m - level);
                let count = a.count_in(x - r, x + r);
                let ratio = frostman_ratio(count, total, m, level, s, kind);
                if best.as_ref().is_none_or(|(b, _)| ratio > *b) {
                    best = Some((
                        ratio,
                        FrostmanWitness {
                            center: x,
                            radius_level: level,
                            count,
                        },
                    ));
                }
            }
            best.expect("at least one radius")
        })
        .reduce_with(|p, q| {
            let take_q = q.0 > p.0
                || (q.0 == p.0
                    && (q.1.center, std::cmp::Reverse(q.1.radius_level))
                        < (p.1.center, std::cmp::Reverse(p.1.radius_level)));
            if take_q {
                q
            } else {
                p
            }
        })
        .expect("non-empty set");
    Ok(FrostmanReport {
        s,
        kind,
        c_min: best.0,
        witness: best.1,
    })
}

/// Katz–Tao constant of `a` at exponent `s`; 1 for the empty set.
pub fn kt_constant(a: &GridSet, s: f64) -> Result<f64> {
    if a.is_empty() {
        return Ok(1.0);
    }
    Ok(frostman_constant(a, s, FrostmanKind::Kt)?.c_min)
}

/// Returns the first `(center, radius_level)` violating the condition with
/// constant `c`, scanning centers in order and radii from small to large.
pub fn frostman_violation(a: &GridSet, s: f64, kind: FrostmanKind, c: f64) -> Option<(i64, u32)> {
    let m = a.m();
    for &x in a.cells() {
        for level in (0..=m).rev() {
            let r = 1i64 << (m - level);
            let count = a.count_in(x - r, x + r);
            if frostman_ratio(count, a.len(), m, level, s, kind) > c {
                return Some((x, level));
            }
        }
    }
    None
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileLevel {
    /// Ladder index `j`; the cell side is `ρ = 2^{-jT}`.
    pub level: u32,
    pub rho: f64,
    pub count: usize,
}

/// Covering numbers along the ladder `ρ = 2^{-jT}`, `0 ≤ j ≤ m/T`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchingProfile {
    pub step: u32,
    pub m: u32,
    pub levels: Vec<ProfileLevel>,
}

impl BranchingProfile {
    pub fn counts(&self) -> Vec<(u32, usize)> {
        self.levels.iter().map(|l| (l.level, l.count)).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("level,rho,count\n");
        for l in &self.levels {
            out.push_str(&format!("{},{:e},{}\n", l.level, l.rho, l.count));
        }
        out
    }
}

pub fn branching_profile(a: &GridSet, step: u32) -> Result<BranchingProfile> {
    let m = a.m();
    if step == 0 || m % step != 0 {
        return Err(Error::invalid(format!(
            "step T = {step} must be ≥ 1 and divide m = {m}"
        )));
    }
    let levels = (0..=m / step)
        .map(|j| {
            Ok(ProfileLevel {
                level: j,
                rho: (-((j * step) as f64)).exp2(),
                count: a.covering_number(j * step)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BranchingProfile { step, m, levels })
}

/// Largest `σ ≥ 0` with `N_ρ(A) ≥ δ^ε ρ^{-σ}` at every dyadic `ρ = 2^{-j}`,
/// `1 ≤ j ≤ m`, evaluated from exact covering numbers.
pub fn sigma_exponent(a: &GridSet, eps: f64) -> Result<f64> {
    if a.is_empty() {
        return Err(Error::domain("σ-exponent of an empty set"));
    }
    if eps < 0.0 {
        return Err(Error::invalid(format!("ε = {eps} must be ≥ 0")));
    }
    let m = a.m();
    let mut sigma = f64::INFINITY;
    for j in 1..=m {
        let n = a.covering_number(j)? as f64;
        sigma = sigma.min((n.log2() - eps * m as f64) / j as f64);
    }
    Ok(sigma.max(0.0))
}

/// Least-squares slope of `log₂ N_{2^-j}(A)` against `j` over `j_lo..=j_hi`.
pub fn box_dim_estimate(a: &GridSet, j_lo: u32, j_hi: u32) -> Result<f64> {
    if j_lo >= j_hi || j_hi > a.m() {
        return Err(Error::invalid(format!(
            "need j_lo < j_hi ≤ m, got {j_lo}..{j_hi} with m = {}",
            a.m()
        )));
    }
    if a.is_empty() {
        return Err(Error::domain("box dimension of an empty set"));
    }
    let pts = (j_lo..=j_hi)
        .map(|j| Ok((j as f64, (a.covering_number(j)? as f64).log2())))
        .collect::<Result<Vec<_>>>()?;
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// Relative tolerance under which a single coarse cell is preferred over
/// the sum of its children in the content recursion.
pub const CONTENT_TIE_TOLERANCE: f64 = 1e-12;

/// Dyadic α-content and an optimal antichain cover.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContentResult<C> {
    pub alpha: f64,
    pub value: f64,
    pub cover: Vec<C>,
    /// `level_counts[j]` is the number of cover cells of side `2^-j`, so the
    /// value is `Σ_j level_counts[j] · 2^{-jα}`.
    pub level_counts: Vec<u64>,
}

struct Node<K> {
    key: K,
    value: f64,
    take_self: bool,
    children: std::ops::Range<usize>,
}

/// Bottom-up tree recursion: a leaf costs `δ^α`, an inner node of side
/// `2^-j` costs `min(2^{-jα}, Σ children)`.
fn content_dp<K: Ord + Copy>(
    leaves: &[K],
    m: u32,
    alpha: f64,
    parent: impl Fn(K) -> K,
) -> (f64, Vec<(u32, K)>, Vec<u64>) {
    let side_cost = |j: u32| (-(j as f64) * alpha).exp2();
    let mut levels: Vec<Vec<Node<K>>> = Vec::with_capacity(m as usize + 1);
    levels.push(
        leaves
            .iter()
            .map(|&key| Node {
                key,
                value: side_cost(m),
                take_self: true,
                children: 0..0,
            })
            .collect(),
    );
    for j in (0..m).rev() {
        let below = levels.last_mut().unwrap();
        below.sort_by_key(|n| (parent(n.key), n.key));
        let cost = side_cost(j);
        let mut nodes: Vec<Node<K>> = Vec::new();
        let mut start = 0;
        while start < below.len() {
            let key = parent(below[start].key);
            let mut end = start;
            let mut sum = 0.0;
            while end < below.len() && parent(below[end].key) == key {
                sum += below[end].value;
                end += 1;
            }
            let take_self = cost <= sum * (1.0 + CONTENT_TIE_TOLERANCE);
            nodes.push(Node {
                key,
                value: if take_self { cost } else { sum },
                take_self,
                children: start..end,
            });
            start = end;
        }
        levels.push(nodes);
    }
    levels.reverse();
    let value = levels[0].iter().map(|n| n.value).sum();
    let mut cover = Vec::new();
    let mut counts = vec![0u64; m as usize + 1];
    let mut stack: Vec<(u32, usize)> = (0..levels[0].len()).rev().map(|i| (0, i)).collect();
    while let Some((j, i)) = stack.pop() {
        let node = &levels[j as usize][i];
        if node.take_self {
            cover.push((j, node.key));
            counts[j as usize] += 1;
        } else {
            for c in node.children.clone().rev() {
                stack.push((j + 1, c));
            }
        }
    }
    (value, cover, counts)
}

/// Dyadic α-content of a set in ℝ over covers by dyadic cells of side
/// between δ and 1.
pub fn dyadic_content(a: &GridSet, alpha: f64) -> Result<ContentResult<DyadicCell>> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::invalid(format!("α = {alpha} outside (0, 1]")));
    }
    let (value, cover, level_counts) = content_dp(a.cells(), a.m(), alpha, |k| k >> 1);
    Ok(ContentResult {
        alpha,
        value,
        cover: cover
            .into_iter()
            .map(|(level, index)| DyadicCell::new(level, index))
            .collect(),
        level_counts,
    })
}

/// Dyadic α-content of a set in ℝ² over covers by dyadic squares.
pub fn dyadic_content_2d(p: &GridSet2D, alpha: f64) -> Result<ContentResult<DyadicSquare>> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(Error::invalid(format!("α = {alpha} outside (0, 2]")));
    }
    let (value, cover, level_counts) = content_dp(p.cells(), p.m(), alpha, |(x, y)| (x >> 1, y >> 1));
    Ok(ContentResult {
        alpha,
        value,
        cover: cover
            .into_iter()
            .map(|(level, (x, y))| DyadicSquare { level, x, y })
            .collect(),
        level_counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(m: u32, cells: impl IntoIterator<Item = i64>) -> GridSet {
        GridSet::from_cells(m, cells).unwrap()
    }

    #[test]
    fn singleton_kt_constant_is_one() {
        let r = frostman_constant(&set(6, [17]), 0.5, FrostmanKind::Kt).unwrap();
        assert_eq!(r.c_min, 1.0);
        assert_eq!(r.witness.radius_level, 6);
    }

    #[test]
    fn full_interval_kt_constant_at_most_three() {
        let m = 8;
        let a = set(m, 0..(1 << m));
        let r = frostman_constant(&a, 1.0, FrostmanKind::Kt).unwrap();
        assert!(r.c_min <= 3.0, "{}", r.c_min);
    }

    #[test]
    fn empty_set_is_rejected() {
        let e = GridSet::empty(4).unwrap();
        assert!(matches!(
            frostman_constant(&e, 0.5, FrostmanKind::Set),
            Err(Error::Domain(_))
        ));
        assert!(sigma_exponent(&e, 0.0).is_err());
    }

    #[test]
    fn witness_is_tight() {
        let a = set(7, [3, 4, 9, 40, 41, 42, 90, 127]);
        for kind in [FrostmanKind::Set, FrostmanKind::Kt] {
            let r = frostman_constant(&a, 0.4, kind).unwrap();
            assert_eq!(frostman_violation(&a, 0.4, kind, r.c_min), None);
            let (x, level) = frostman_violation(&a, 0.4, kind, r.c_min * (1.0 - 1e-9)).expect("violated");
            let rr = 1i64 << (7 - level);
            assert_eq!(a.count_in(x - rr, x + rr), r.witness.count);
            assert!(r.witness.center <= x);
        }
    }

    #[test]
    fn branching_profile_examples() {
        let full = set(4, 0..16);
        assert_eq!(
            branching_profile(&full, 2).unwrap().counts(),
            vec![(0, 1), (1, 4), (2, 16)]
        );
        let single = set(6, [9]);
        let p = branching_profile(&single, 3).unwrap();
        assert!(p.levels.iter().all(|l| l.count == 1));
        assert!(branching_profile(&full, 3).is_err());
        assert!(branching_profile(&full, 0).is_err());
        let csv = branching_profile(&full, 2).unwrap().to_csv();
        assert!(csv.starts_with("level,rho,count\n0,1e0,1\n"));
    }

    #[test]
    fn sigma_examples() {
        let m = 10;
        assert_eq!(sigma_exponent(&set(m, 0..(1 << m)), 0.0).unwrap(), 1.0);
        assert_eq!(sigma_exponent(&set(m, [5]), 0.0).unwrap(), 0.0);
    }

    #[test]
    fn sigma_satisfies_defining_display() {
        let a = set(9, [1, 2, 3, 50, 51, 200, 201, 300, 450, 511]);
        let eps = 0.05;
        let sigma = sigma_exponent(&a, eps).unwrap();
        for j in 1..=9u32 {
            let n = a.covering_number(j).unwrap() as f64;
            let rhs = (-(9.0 * eps)).exp2() * (j as f64 * sigma).exp2();
            assert!(n >= rhs * (1.0 - 1e-12), "j = {j}");
        }
    }

    #[test]
    fn box_dimension_examples() {
        let m = 12;
        let full = set(m, 0..(1 << m));
        assert!((box_dim_estimate(&full, 2, 12).unwrap() - 1.0).abs() < 1e-9);
        assert_eq!(box_dim_estimate(&set(m, [7]), 0, 12).unwrap(), 0.0);
        assert!(box_dim_estimate(&full, 5, 5).is_err());
        assert!(box_dim_estimate(&full, 5, 13).is_err());
    }

    #[test]
    fn content_examples() {
        let m = 8;
        for alpha in [0.3, 0.5, 1.0] {
            let r = dyadic_content(&set(m, [77]), alpha).unwrap();
            assert!((r.value - (-(m as f64) * alpha).exp2()).abs() < 1e-15);
            assert_eq!(r.cover, vec![DyadicCell::new(m, 77)]);
        }
        let full = dyadic_content(&set(m, 0..(1 << m)), 0.7).unwrap();
        assert_eq!(full.value, 1.0);
        assert_eq!(full.cover, vec![DyadicCell::new(0, 0)]);
        assert!(dyadic_content(&set(m, [1]), 0.0).is_err());
        assert!(dyadic_content(&set(m, [1]), 1.5).is_err());
    }

    #[test]
    fn content_cover_is_disjoint_and_covering() {
        let a = set(6, [0, 1, 2, 9, 33, 34, 35, 36, 63, -5]);
        let r = dyadic_content(&a, 0.6).unwrap();
        for &c in a.cells() {
            let hits = r.cover.iter().filter(|d| c >> (6 - d.level) == d.index).count();
            assert_eq!(hits, 1, "cell {c}");
        }
        let from_counts: f64 = r
            .level_counts
            .iter()
            .enumerate()
            .map(|(j, &n)| n as f64 * (-(j as f64) * 0.6).exp2())
            .sum();
        assert!((from_counts - r.value).abs() < 1e-12);
        assert!(r.value <= (a.len() as f64 * (-6.0 * 0.6f64).exp2()).min(2.0));
    }

    #[test]
    fn content_2d_basics() {
        let p = GridSet2D::from_cells(5, [(3, 4)]).unwrap();
        let r = dyadic_content_2d(&p, 1.25).unwrap();
        assert!((r.value - (-5.0 * 1.25f64).exp2()).abs() < 1e-15);
        let full = GridSet2D::from_cells(4, (0..16).flat_map(|x| (0..16).map(move |y| (x, y)))).unwrap();
        assert_eq!(dyadic_content_2d(&full, 1.25).unwrap().value, 1.0);
    }
}
