//! Exact integer representation of δ-discretized subsets of the line and
//! the plane.
//!
//! A [`GridSet`] at scale exponent `m` stores the indices `i` of the dyadic
//! cells `[i·δ, (i+1)·δ)` with `δ = 2⁻ᵐ`. Every cell is represented by its
//! left endpoint `i·δ`; sums, differences, products, quotients and inverses
//! are evaluated on representative points with exact integer arithmetic.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported scale exponent. Products of two cell indices are
/// evaluated in `i128`, so `2m + 2` bits must fit comfortably.
pub const MAX_SCALE: u32 = 40;

/// Index ranges up to this size use a dense bitmap when collecting the cells
/// of a sum or difference set.
pub(crate) const DENSE_RANGE_LIMIT: i64 = 1 << 26;

fn check_scale(m: u32) -> Result<()> {
    if m == 0 || m > MAX_SCALE {
        return Err(Error::invalid(format!(
            "scale exponent m = {m} outside 1..={MAX_SCALE}"
        )));
    }
    Ok(())
}

/// A dyadic interval `[index·2⁻ˡᵉᵛᵉˡ, (index+1)·2⁻ˡᵉᵛᵉˡ)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DyadicCell {
    pub level: u32,
    pub index: i64,
}

impl DyadicCell {
    pub fn new(level: u32, index: i64) -> Self {
        Self { level, index }
    }
}

/// A dyadic square of side `2⁻ˡᵉᵛᵉˡ` in the plane.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DyadicSquare {
    pub level: u32,
    pub x: i64,
    pub y: i64,
}

/// Binary operations on representative points.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArithOp {
    Sum,
    Diff,
    Prod,
    Quot,
}

impl FromStr for ArithOp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sum" => Ok(ArithOp::Sum),
            "diff" => Ok(ArithOp::Diff),
            "prod" => Ok(ArithOp::Prod),
            "quot" => Ok(ArithOp::Quot),
            other => Err(Error::invalid(format!("unknown arithmetic op '{other}'"))),
        }
    }
}

#[derive(Deserialize)]
struct GridSetRepr {
    m: u32,
    cells: Vec<i64>,
    #[serde(default)]
    label: Option<String>,
}

impl TryFrom<GridSetRepr> for GridSet {
    type Error = Error;

    fn try_from(r: GridSetRepr) -> Result<Self> {
        let mut set = GridSet::from_cells(r.m, r.cells)?;
        set.label = r.label;
        Ok(set)
    }
}

/// A δ-discretized subset of ℝ: sorted, duplicate-free cell indices at scale
/// `δ = 2⁻ᵐ`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "GridSetRepr")]
pub struct GridSet {
    m: u32,
    cells: Vec<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    label: Option<String>,
}

impl GridSet {
    /// Builds a set from arbitrary cell indices; sorts and removes duplicates.
    pub fn from_cells(m: u32, cells: impl IntoIterator<Item = i64>) -> Result<Self> {
        check_scale(m)?;
        let mut cells: Vec<i64> = cells.into_iter().collect();
        cells.sort_unstable();
        cells.dedup();
        Ok(Self { m, cells, label: None })
    }

    /// Caller guarantees `cells` is strictly increasing and `m` is valid.
    pub(crate) fn from_sorted_unchecked(m: u32, cells: Vec<i64>) -> Self {
        debug_assert!(cells.windows(2).all(|w| w[0] < w[1]));
        Self { m, cells, label: None }
    }

    pub fn empty(m: u32) -> Result<Self> {
        Self::from_cells(m, std::iter::empty())
    }

    /// Quantizes real points: cell `⌊p·2ᵐ⌋` for each point.
    pub fn from_points(points: &[f64], m: u32) -> Result<Self> {
        check_scale(m)?;
        let scale = (m as f64).exp2();
        let mut cells = Vec::with_capacity(points.len());
        for &p in points {
            if !p.is_finite() {
                return Err(Error::invalid(format!("non-finite point {p}")));
            }
            let x = (p * scale).floor();
            if x.abs() > 9.0e15 {
                return Err(Error::invalid(format!("point {p} out of range at m = {m}")));
            }
            cells.push(x as i64);
        }
        Self::from_cells(m, cells)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn delta(&self) -> f64 {
        (-(self.m as f64)).exp2()
    }

    pub fn cells(&self) -> &[i64] {
        &self.cells
    }

    pub fn into_cells(self) -> Vec<i64> {
        self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn contains(&self, cell: i64) -> bool {
        self.cells.binary_search(&cell).is_ok()
    }

    pub fn min(&self) -> Option<i64> {
        self.cells.first().copied()
    }

    pub fn max(&self) -> Option<i64> {
        self.cells.last().copied()
    }

    /// Number of cells with index in the closed range `[lo, hi]`.
    pub fn count_in(&self, lo: i64, hi: i64) -> usize {
        if hi < lo {
            return 0;
        }
        let start = self.cells.partition_point(|&c| c < lo);
        let end = self.cells.partition_point(|&c| c <= hi);
        end - start
    }

    pub(crate) fn check_same_scale(&self, other: &GridSet) -> Result<()> {
        if self.m != other.m {
            return Err(Error::ScaleMismatch {
                left: self.m,
                right: other.m,
            });
        }
        Ok(())
    }

    fn check_level(&self, j: u32) -> Result<()> {
        if j > self.m {
            return Err(Error::invalid(format!("level {j} outside 0..={} for this set", self.m)));
        }
        Ok(())
    }

    /// Number of level-`j` dyadic cells meeting the set, `N_{2^-j}(A)`.
    pub fn covering_number(&self, j: u32) -> Result<usize> {
        self.check_level(j)?;
        let shift = self.m - j;
        let mut count = 0;
        let mut last = None;
        for &c in &self.cells {
            let parent = c >> shift;
            if last != Some(parent) {
                count += 1;
                last = Some(parent);
            }
        }
        Ok(count)
    }

    /// The distinct level-`j` ancestors of the cells, sorted.
    pub fn dyadic_cells(&self, j: u32) -> Result<Vec<DyadicCell>> {
        self.check_level(j)?;
        let shift = self.m - j;
        let mut out: Vec<DyadicCell> = Vec::new();
        for &c in &self.cells {
            let parent = c >> shift;
            if out.last().map(|d| d.index) != Some(parent) {
                out.push(DyadicCell::new(j, parent));
            }
        }
        Ok(out)
    }

    /// Closed neighborhood `{i + k : |k| ≤ w}`.
    pub fn neighborhood(&self, w: u64) -> GridSet {
        let w = w as i64;
        let mut out = Vec::with_capacity(self.cells.len());
        let mut next_free = i64::MIN;
        for &c in &self.cells {
            let lo = (c - w).max(next_free);
            for x in lo..=c + w {
                out.push(x);
            }
            next_free = c + w + 1;
        }
        GridSet::from_sorted_unchecked(self.m, out)
    }

    /// Maps every cell `i ↦ ±i + shift`.
    pub fn affine_image(&self, negate: bool, shift: i64) -> GridSet {
        let cells: Vec<i64> = if negate {
            self.cells.iter().rev().map(|&c| shift - c).collect()
        } else {
            self.cells.iter().map(|&c| c + shift).collect()
        };
        GridSet::from_sorted_unchecked(self.m, cells)
    }

    pub fn negate(&self) -> GridSet {
        self.affine_image(true, 0)
    }

    /// Cells of `1/x` for representative points `x ∈ [1/2, 1]`:
    /// `i ↦ ⌊2²ᵐ / i⌋`. Images may reach `2ᵐ⁺¹` (the point 2).
    pub fn invert(&self) -> Result<GridSet> {
        let half = 1i64 << (self.m - 1);
        if let Some(&c) = self.cells.iter().find(|&&c| c < half) {
            return Err(Error::domain(format!(
                "invert needs cells ≥ 2^(m-1) = {half} (points in [1/2, 1]); found {c}"
            )));
        }
        let num = 1i128 << (2 * self.m);
        GridSet::from_cells(self.m, self.cells.iter().map(|&c| (num / c as i128) as i64))
    }

    /// Greedy left-to-right selection keeping a cell when it is at least two
    /// cells from the previously kept one.
    pub fn maximal_separated_subset(&self) -> GridSet {
        let mut out = Vec::new();
        for &c in &self.cells {
            match out.last() {
                Some(&prev) if c - prev < 2 => {}
                _ => out.push(c),
            }
        }
        GridSet::from_sorted_unchecked(self.m, out)
    }

    pub fn union(&self, other: &GridSet) -> Result<GridSet> {
        self.check_same_scale(other)?;
        let mut out = Vec::with_capacity(self.len() + other.len());
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.cells, &other.cells);
        while i < a.len() || j < b.len() {
            let next = match (a.get(i), b.get(j)) {
                (Some(&x), Some(&y)) if x == y => {
                    i += 1;
                    j += 1;
                    x
                }
                (Some(&x), Some(&y)) if x < y => {
                    i += 1;
                    x
                }
                (Some(_), Some(&y)) => {
                    j += 1;
                    y
                }
                (Some(&x), None) => {
                    i += 1;
                    x
                }
                (None, Some(&y)) => {
                    j += 1;
                    y
                }
                (None, None) => unreachable!(),
            };
            out.push(next);
        }
        Ok(GridSet::from_sorted_unchecked(self.m, out))
    }

    pub fn intersection(&self, other: &GridSet) -> Result<GridSet> {
        self.check_same_scale(other)?;
        let cells = self.cells.iter().copied().filter(|&c| other.contains(c)).collect();
        Ok(GridSet::from_sorted_unchecked(self.m, cells))
    }

    /// Cells of `self` not in `other`.
    pub fn difference(&self, other: &GridSet) -> Result<GridSet> {
        self.check_same_scale(other)?;
        let cells = self.cells.iter().copied().filter(|&c| !other.contains(c)).collect();
        Ok(GridSet::from_sorted_unchecked(self.m, cells))
    }

    pub fn is_subset_of(&self, other: &GridSet) -> bool {
        self.m == other.m && self.cells.iter().all(|&c| other.contains(c))
    }

    /// Keeps the cells for which `keep` returns true.
    pub fn filter(&self, mut keep: impl FnMut(i64) -> bool) -> GridSet {
        let cells = self.cells.iter().copied().filter(|&c| keep(c)).collect();
        GridSet::from_sorted_unchecked(self.m, cells)
    }

    /// Plain-text form: a header line `m=<int>` followed by one index per line.
    pub fn to_text(&self) -> String {
        let mut s = format!("m={}\n", self.m);
        for c in &self.cells {
            s.push_str(&c.to_string());
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines.next().ok_or_else(|| Error::invalid("empty grid-set text"))?;
        let m = header
            .strip_prefix("m=")
            .and_then(|v| v.trim().parse::<u32>().ok())
            .ok_or_else(|| Error::invalid(format!("bad header line '{header}'")))?;
        let cells = lines
            .map(|l| {
                l.parse::<i64>()
                    .map_err(|_| Error::invalid(format!("bad cell line '{l}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_cells(m, cells)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

impl fmt::Display for GridSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GridSet(m={}, #cells={})", self.m, self.cells.len())
    }
}

/// Collects possibly repeated cell indices into a sorted duplicate-free
/// vector, using a bitmap when the index range is small.
pub(crate) fn collect_cells(lo: i64, hi: i64, values: impl Iterator<Item = i64>) -> Vec<i64> {
    if hi < lo {
        return Vec::new();
    }
    let range = hi - lo + 1;
    if range <= DENSE_RANGE_LIMIT {
        let mut bits = vec![0u64; (range as usize).div_ceil(64)];
        for v in values {
            let k = (v - lo) as usize;
            bits[k / 64] |= 1 << (k % 64);
        }
        let mut out = Vec::new();
        for (w, &word) in bits.iter().enumerate() {
            let mut word = word;
            while word != 0 {
                let b = word.trailing_zeros() as usize;
                out.push(lo + (w * 64 + b) as i64);
                word &= word - 1;
            }
        }
        out
    } else {
        let mut out: Vec<i64> = values.collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// Sum, difference, product or quotient set of two sets at the same scale.
///
/// Product and quotient require every cell index to be ≥ 1 (points bounded
/// away from zero).
pub fn arithmetic(a: &GridSet, b: &GridSet, op: ArithOp) -> Result<GridSet> {
    a.check_same_scale(b)?;
    let m = a.m;
    if a.is_empty() || b.is_empty() {
        return GridSet::empty(m);
    }
    let (amin, amax) = (a.cells[0], *a.cells.last().unwrap());
    let (bmin, bmax) = (b.cells[0], *b.cells.last().unwrap());
    let cells = match op {
        ArithOp::Sum => collect_cells(
            amin + bmin,
            amax + bmax,
            a.cells.iter().flat_map(|&x| b.cells.iter().map(move |&y| x + y)),
        ),
        ArithOp::Diff => collect_cells(
            amin - bmax,
            amax - bmin,
            a.cells.iter().flat_map(|&x| b.cells.iter().map(move |&y| x - y)),
        ),
        ArithOp::Prod | ArithOp::Quot => {
            if amin < 1 || bmin < 1 {
                return Err(Error::domain(format!(
                    "{op:?} requires cell indices ≥ 1 (points bounded away from 0)"
                )));
            }
            let vals: Vec<i64> = if op == ArithOp::Prod {
                a.cells
                    .iter()
                    .flat_map(|&x| b.cells.iter().map(move |&y| ((x as i128 * y as i128) >> m) as i64))
                    .collect()
            } else {
                a.cells
                    .iter()
                    .flat_map(|&x| b.cells.iter().map(move |&y| (((x as i128) << m) / y as i128) as i64))
                    .collect()
            };
            let lo = vals.iter().copied().min().unwrap();
            let hi = vals.iter().copied().max().unwrap();
            collect_cells(lo, hi, vals.into_iter())
        }
    };
    Ok(GridSet::from_sorted_unchecked(m, cells))
}

#[derive(Deserialize)]
struct GridSet2DRepr {
    m: u32,
    cells: Vec<(i64, i64)>,
}

impl TryFrom<GridSet2DRepr> for GridSet2D {
    type Error = Error;

    fn try_from(r: GridSet2DRepr) -> Result<Self> {
        GridSet2D::from_cells(r.m, r.cells)
    }
}

/// A δ-discretized subset of ℝ²: lexicographically sorted cell pairs.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "GridSet2DRepr")]
pub struct GridSet2D {
    m: u32,
    cells: Vec<(i64, i64)>,
}

impl GridSet2D {
    pub fn from_cells(m: u32, cells: impl IntoIterator<Item = (i64, i64)>) -> Result<Self> {
        check_scale(m)?;
        let mut cells: Vec<(i64, i64)> = cells.into_iter().collect();
        cells.sort_unstable();
        cells.dedup();
        Ok(Self { m, cells })
    }

    /// Cartesian product `xs × ys`.
    pub fn product(xs: &GridSet, ys: &GridSet) -> Result<Self> {
        xs.check_same_scale(ys)?;
        let cells = xs
            .cells()
            .iter()
            .flat_map(|&x| ys.cells().iter().map(move |&y| (x, y)))
            .collect();
        Ok(Self { m: xs.m(), cells })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn cells(&self) -> &[(i64, i64)] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn contains(&self, cell: (i64, i64)) -> bool {
        self.cells.binary_search(&cell).is_ok()
    }

    pub fn covering_number(&self, j: u32) -> Result<usize> {
        if j > self.m {
            return Err(Error::invalid(format!("level {j} outside 0..={}", self.m)));
        }
        let shift = self.m - j;
        let mut parents: Vec<(i64, i64)> = self.cells.iter().map(|&(x, y)| (x >> shift, y >> shift)).collect();
        parents.sort_unstable();
        parents.dedup();
        Ok(parents.len())
    }
}
