//! Tube families over `A × B`, their shadings, exact ball–tube incidence
//! counts and the quasi-product incidence bound.
//!
//! A tube `(a, b)` is the set of cells `(X, Y)` whose representative point
//! lies within `w·δ` vertically of the line `y = x/a − b`. In cell units the
//! test is `|(Y + b)·a − X·2^m| ≤ w·a`, which is exact.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{FiberMode, PairHistogram};
use crate::error::{Error, Result};
use crate::grid::{GridSet, GridSet2D};
use crate::regularity::kt_constant;

/// Tube width used for incidence instances built from representations.
pub const DEFAULT_TUBE_WIDTH: u64 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Tube {
    /// Slope parameter cell; the line is `y = x/a − b`.
    pub a: i64,
    /// Offset cell.
    pub b: i64,
}

impl Tube {
    pub fn contains(&self, m: u32, width: u64, cell: (i64, i64)) -> bool {
        let (x, y) = cell;
        let lhs = (y as i128 + self.b as i128) * self.a as i128 - ((x as i128) << m);
        lhs.unsigned_abs() <= width as u128 * self.a as u128
    }

    /// Inclusive range of `Y` with `(X, Y)` in the tube.
    pub fn column_range(&self, m: u32, width: u64, x: i64) -> (i64, i64) {
        let a = self.a as i128;
        let center = (x as i128) << m;
        let spread = width as i128 * a;
        let lo = (center - spread).div_euclid(a) + i128::from((center - spread).rem_euclid(a) != 0);
        let hi = (center + spread).div_euclid(a);
        ((lo - self.b as i128) as i64, (hi - self.b as i128) as i64)
    }

    /// Cell index of the direction `1/a` at resolution δ, `⌊2^{2m}/a⌋`.
    pub fn direction_bucket(&self, m: u32) -> i64 {
        ((1i128 << (2 * m)) / self.a as i128) as i64
    }
}

/// One tube per `(a, b) ∈ A × B`, with measured quasi-product constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TubeFamily {
    pub m: u32,
    pub width: u64,
    pub slopes: GridSet,
    pub offsets: GridSet,
    /// The direction set `A⁻¹` at resolution δ.
    pub directions: GridSet,
    pub s: f64,
    pub t: f64,
    /// KT constant of the direction set at exponent `s`.
    pub k1: f64,
    /// Largest KT constant of a direction fiber's offsets at exponent `t`.
    pub k2: f64,
}

impl TubeFamily {
    pub fn len(&self) -> usize {
        self.slopes.len() * self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Tubes in slope-major order.
    pub fn tubes(&self) -> impl Iterator<Item = Tube> + '_ {
        self.slopes
            .cells()
            .iter()
            .flat_map(move |&a| self.offsets.cells().iter().map(move |&b| Tube { a, b }))
    }

    pub fn tube(&self, index: usize) -> Tube {
        let n = self.offsets.len();
        Tube {
            a: self.slopes.cells()[index / n],
            b: self.offsets.cells()[index % n],
        }
    }
}

pub fn build_tube_family(a: &GridSet, b: &GridSet, width: u64, s: f64, t: f64) -> Result<TubeFamily> {
    a.check_same_scale(b)?;
    let m = a.m();
    let half = 1i64 << (m - 1);
    if a.cells().iter().any(|&x| x < half || x > 2 * half) {
        return Err(Error::domain("tube slopes must lie in [1/2, 1]"));
    }
    if width == 0 {
        return Err(Error::invalid("tube width must be ≥ 1"));
    }
    let directions = a.invert()?;
    let k1 = kt_constant(&directions, s)?;
    // every direction fiber carries the full offset set
    let k2 = if a.is_empty() { 1.0 } else { kt_constant(b, t)? };
    Ok(TubeFamily {
        m,
        width,
        slopes: a.clone(),
        offsets: b.clone(),
        directions,
        s,
        t,
        k1,
        k2,
    })
}

/// Cells assigned to each tube, in the family's tube order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Shading {
    pub window: u64,
    pub sigma: f64,
    /// Largest KT constant of a tube's shading (measured on `y`) at `sigma`.
    pub k3: f64,
    pub cells: Vec<Vec<(i64, i64)>>,
}

impl Shading {
    /// `Σ_T #Y(T)`.
    pub fn total(&self) -> u64 {
        self.cells.iter().map(|c| c.len() as u64).sum()
    }

    /// `Y(𝒯)`, the union of all shadings.
    pub fn union(&self, m: u32) -> Result<GridSet2D> {
        GridSet2D::from_cells(m, self.cells.iter().flatten().copied())
    }
}

/// Shades tube `(a, b)` with `{(a·a′, a′ − b) : a′ ∈ A, a′ − b ∈ N_w(C)}`.
pub fn build_shading(family: &TubeFamily, a: &GridSet, c: &GridSet, window: u64, sigma: f64) -> Result<Shading> {
    a.check_same_scale(c)?;
    let m = family.m;
    let near = c.neighborhood(window);
    // the shaded a′ depend only on b
    let per_offset: Vec<Vec<i64>> = family
        .offsets
        .cells()
        .par_iter()
        .map(|&b| a.cells().iter().copied().filter(|&x| near.contains(x - b)).collect())
        .collect();
    let mut kt_cache: HashMap<Vec<i64>, f64> = HashMap::new();
    let mut k3 = 1.0f64;
    for xs in &per_offset {
        if xs.is_empty() {
            continue;
        }
        // the KT constant is translation invariant
        let key: Vec<i64> = xs.iter().map(|&x| x - xs[0]).collect();
        let value = match kt_cache.get(&key) {
            Some(&v) => v,
            None => {
                let v = kt_constant(&GridSet::from_sorted_unchecked(m, key.clone()), sigma)?;
                kt_cache.insert(key, v);
                v
            }
        };
        k3 = k3.max(value);
    }
    let cells = family
        .tubes()
        .collect::<Vec<_>>()
        .par_iter()
        .enumerate()
        .map(|(i, tube)| {
            let xs = &per_offset[i % family.offsets.len()];
            let mut v: Vec<(i64, i64)> = xs
                .iter()
                .map(|&x| (((tube.a as i128 * x as i128) >> m) as i64, x - tube.b))
                .collect();
            v.sort_unstable();
            v
        })
        .collect();
    Ok(Shading {
        window,
        sigma,
        k3,
        cells,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CountMode {
    Brute,
    Grid,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IncidenceCount {
    pub incidences: u64,
    /// Shaded cells missing from the point set (not counted).
    pub dropped: u64,
}

/// `#{(T, B) : B ∈ P, B ∈ Y(T), B meets T}`.
pub fn count_incidences(
    points: &GridSet2D,
    family: &TubeFamily,
    shading: &Shading,
    mode: CountMode,
) -> Result<IncidenceCount> {
    if points.m() != family.m {
        return Err(Error::ScaleMismatch {
            left: points.m(),
            right: family.m,
        });
    }
    if shading.cells.len() != family.len() {
        return Err(Error::invalid("shading does not match the tube family"));
    }
    let (m, w) = (family.m, family.width);
    let pts = points.cells();
    let (incidences, dropped) = (0..family.len())
        .into_par_iter()
        .map(|i| {
            let tube = family.tube(i);
            let shade = &shading.cells[i];
            let dropped = shade.iter().filter(|c| !points.contains(**c)).count() as u64;
            let hits = match mode {
                CountMode::Brute => pts
                    .iter()
                    .filter(|&&p| tube.contains(m, w, p) && shade.binary_search(&p).is_ok())
                    .count() as u64,
                CountMode::Grid => {
                    let mut hits = 0u64;
                    let mut k = 0;
                    while k < shade.len() {
                        let x = shade[k].0;
                        let end = k + shade[k..].partition_point(|c| c.0 == x);
                        let (lo, hi) = tube.column_range(m, w, x);
                        let column =
                            &pts[pts.partition_point(|p| *p < (x, lo))..pts.partition_point(|p| *p <= (x, hi))];
                        let own = &shade[k + shade[k..end].partition_point(|c| c.1 < lo)
                            ..k + shade[k..end].partition_point(|c| c.1 <= hi)];
                        hits += merge_count(column, own);
                        k = end;
                    }
                    hits
                }
            };
            (hits, dropped)
        })
        .reduce(|| (0, 0), |p, q| (p.0 + q.0, p.1 + q.1));
    Ok(IncidenceCount { incidences, dropped })
}

fn merge_count(a: &[(i64, i64)], b: &[(i64, i64)]) -> u64 {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// `K₃^{1/3}(K₁K₂)^{2/3}(δ^{−s−d}#𝒯)^{1/3}#Y(𝒯)^{2/3}`.
#[allow(clippy::too_many_arguments)]
pub fn incidence_bound_rhs(m: u32, tubes: u64, shaded: u64, s: f64, d: f64, k1: f64, k2: f64, k3: f64) -> f64 {
    let scale = ((s + d) * m as f64).exp2();
    k3.cbrt() * (k1 * k2).powf(2.0 / 3.0) * (scale * tubes as f64).cbrt() * (shaded as f64).powf(2.0 / 3.0)
}

/// Measured incidences over the quasi-product bound, with the family's and
/// shading's measured constants; `d` is the offset exponent.
pub fn incidence_bound_ratio(incidences: u64, family: &TubeFamily, shading: &Shading, s: f64, d: f64) -> Result<f64> {
    let shaded = shading.union(family.m)?.len() as u64;
    let rhs = incidence_bound_rhs(
        family.m,
        family.len() as u64,
        shaded,
        s,
        d,
        family.k1,
        family.k2,
        shading.k3,
    );
    Ok(incidences as f64 / rhs)
}

/// `#{(a, b, c) ∈ A×B×C : |c − (a − b)| ≤ w}`.
pub fn representation_count(a: &GridSet, b: &GridSet, c: &GridSet, w: u64) -> Result<u64> {
    a.check_same_scale(c)?;
    let h = PairHistogram::build(a, b, FiberMode::Difference)?;
    Ok(h.windowed_at(c.cells(), w).iter().sum())
}

/// Largest number of cells of `c` in a window of `2w + 1` consecutive cells.
pub fn window_multiplicity(c: &GridSet, w: u64) -> u64 {
    let cells = c.cells();
    let span = 2 * w as i64;
    let mut best = 0;
    let mut lo = 0;
    for hi in 0..cells.len() {
        while cells[hi] - cells[lo] > span {
            lo += 1;
        }
        best = best.max(hi - lo + 1);
    }
    best as u64
}

/// The incidence problem attached to representations `a − b ≈ c`: tubes
/// over `A × B`, shading from `A` and `N_w(C)`, points `AA × N_w(C)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepresentationInstance {
    pub family: TubeFamily,
    pub shading: Shading,
    pub points: GridSet2D,
    pub incidences: IncidenceCount,
    pub representations: u64,
    /// Largest number of `C` cells in one representation window.
    pub multiplicity: u64,
}

impl RepresentationInstance {
    #[allow(clippy::too_many_arguments)]
    pub fn build(
        a: &GridSet,
        b: &GridSet,
        c: &GridSet,
        window: u64,
        tube_width: u64,
        s: f64,
        t: f64,
        mode: CountMode,
    ) -> Result<Self> {
        let sigma = (s + t).min(2.0 - s - t);
        let family = build_tube_family(a, b, tube_width, s, t)?;
        let shading = build_shading(&family, a, c, window, sigma)?;
        let products = crate::grid::arithmetic(a, a, crate::ArithOp::Prod)?;
        let points = GridSet2D::product(&products, &c.neighborhood(window))?;
        let incidences = count_incidences(&points, &family, &shading, mode)?;
        Ok(Self {
            representations: representation_count(a, b, c, window)?,
            multiplicity: window_multiplicity(c, window),
            family,
            shading,
            points,
            incidences,
        })
    }

    /// `#A · representations ≤ multiplicity · ℐ`, exactly.
    pub fn dummy_variable_bound_holds(&self) -> bool {
        self.family.slopes.len() as u128 * self.representations as u128
            <= self.multiplicity as u128 * self.incidences.incidences as u128
    }
}
