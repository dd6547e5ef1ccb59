//! Pair histograms, windowed fiber counts, δ-separated energies, popular and
//! rich sets, and dyadic level sets of fibers.

use std::cmp::Ordering;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridSet, DENSE_RANGE_LIMIT};
use crate::uniformize::{self, UniformCertificate, UniformityParams};

/// Whether pairs are combined as `a − b` or `a + b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FiberMode {
    Difference,
    Sum,
}

impl FiberMode {
    fn combine(self, a: i64, b: i64) -> i64 {
        match self {
            FiberMode::Difference => a - b,
            FiberMode::Sum => a + b,
        }
    }
}

/// Exact histogram `h(d) = #{(a, b) ∈ A×B : a ∘ b = d}` stored as sorted
/// nonzero entries.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairHistogram {
    pub m: u32,
    pub mode: FiberMode,
    entries: Vec<(i64, u64)>,
}

const MIN_BAND: i64 = 1 << 14;

impl PairHistogram {
    pub fn build(a: &GridSet, b: &GridSet, mode: FiberMode) -> Result<Self> {
        a.check_same_scale(b)?;
        let m = a.m();
        let (Some(a_lo), Some(b_lo)) = (a.min(), b.min()) else {
            return Ok(Self {
                m,
                mode,
                entries: Vec::new(),
            });
        };
        let (a_hi, b_hi) = (a.max().unwrap(), b.max().unwrap());
        let (lo, hi) = match mode {
            FiberMode::Difference => (a_lo - b_hi, a_hi - b_lo + 1),
            FiberMode::Sum => (a_lo + b_lo, a_hi + b_hi + 1),
        };
        let entries = if hi - lo <= DENSE_RANGE_LIMIT {
            let threads = rayon::current_num_threads().max(1) as i64;
            let band = ((hi - lo) / (4 * threads) + 1).max(MIN_BAND);
            let starts: Vec<i64> = (lo..hi).step_by(band as usize).collect();
            starts
                .into_par_iter()
                .map(|s| band_entries(a.cells(), b.cells(), mode, s, (s + band).min(hi)))
                .collect::<Vec<_>>()
                .concat()
        } else {
            let mut values: Vec<i64> = a
                .cells()
                .par_iter()
                .flat_map_iter(|&x| b.cells().iter().map(move |&y| mode.combine(x, y)))
                .collect();
            values.par_sort_unstable();
            let mut out: Vec<(i64, u64)> = Vec::new();
            for v in values {
                match out.last_mut() {
                    Some((d, n)) if *d == v => *n += 1,
                    _ => out.push((v, 1)),
                }
            }
            out
        };
        Ok(Self { m, mode, entries })
    }

    pub fn entries(&self) -> &[(i64, u64)] {
        &self.entries
    }

    /// Number of distinct values `a ∘ b`, i.e. `N_δ(A ∘ B)`.
    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    pub fn support(&self) -> GridSet {
        GridSet::from_sorted_unchecked(self.m, self.entries.iter().map(|e| e.0).collect())
    }

    pub fn total(&self) -> u64 {
        self.entries.iter().map(|e| e.1).sum()
    }

    pub fn get(&self, d: i64) -> u64 {
        self.entries
            .binary_search_by_key(&d, |e| e.0)
            .map_or(0, |i| self.entries[i].1)
    }

    /// `Σ_{|d − z| ≤ w} h(d)` at the given sorted-or-unsorted centers.
    pub fn windowed_at(&self, centers: &[i64], w: u64) -> Vec<u64> {
        let mut prefix = Vec::with_capacity(self.entries.len() + 1);
        prefix.push(0u64);
        for e in &self.entries {
            prefix.push(prefix.last().unwrap() + e.1);
        }
        let w = w as i64;
        centers
            .iter()
            .map(|&z| {
                let s = self.entries.partition_point(|e| e.0 < z - w);
                let t = self.entries.partition_point(|e| e.0 <= z + w);
                prefix[t] - prefix[s]
            })
            .collect()
    }

    /// Windowed counts at every lattice point where they are nonzero.
    pub fn windowed(&self, w: u64) -> FiberCounts {
        let wi = w as i64;
        let mut centers: Vec<i64> = Vec::with_capacity(self.entries.len() * (2 * w as usize + 1));
        for &(d, _) in &self.entries {
            let start = centers.last().map_or(d - wi, |&z| (z + 1).max(d - wi));
            centers.extend(start..=d + wi);
        }
        let mut counts = Vec::with_capacity(centers.len());
        let (mut s, mut t, mut acc) = (0usize, 0usize, 0u64);
        for &z in &centers {
            while t < self.entries.len() && self.entries[t].0 <= z + wi {
                acc += self.entries[t].1;
                t += 1;
            }
            while self.entries[s].0 < z - wi {
                acc -= self.entries[s].1;
                s += 1;
            }
            counts.push(acc);
        }
        FiberCounts {
            m: self.m,
            mode: self.mode,
            window: w,
            explicit_centers: false,
            centers,
            counts,
        }
    }
}

fn band_entries(a: &[i64], b: &[i64], mode: FiberMode, lo: i64, hi: i64) -> Vec<(i64, u64)> {
    let mut local = vec![0u64; (hi - lo) as usize];
    for &x in a {
        let (s, e) = match mode {
            FiberMode::Difference => (b.partition_point(|&y| y <= x - hi), b.partition_point(|&y| y <= x - lo)),
            FiberMode::Sum => (b.partition_point(|&y| y < lo - x), b.partition_point(|&y| y < hi - x)),
        };
        for &y in &b[s..e] {
            local[(mode.combine(x, y) - lo) as usize] += 1;
        }
    }
    local
        .into_iter()
        .enumerate()
        .filter(|e| e.1 > 0)
        .map(|(i, n)| (lo + i as i64, n))
        .collect()
}

/// Windowed fiber counts `r(z) = #{(a, b) : |a ∘ b − z| ≤ w}`.
///
/// Over the lattice only nonzero centers are stored; with explicit centers
/// every requested center is present.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiberCounts {
    pub m: u32,
    pub mode: FiberMode,
    pub window: u64,
    pub explicit_centers: bool,
    pub centers: Vec<i64>,
    pub counts: Vec<u64>,
}

/// Where fiber counts are evaluated.
#[derive(Clone, Copy, Debug)]
pub enum Centers<'a> {
    Lattice,
    Explicit(&'a GridSet),
}

impl FiberCounts {
    pub fn get(&self, z: i64) -> u64 {
        self.centers.binary_search(&z).map_or(0, |i| self.counts[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, u64)> + '_ {
        self.centers.iter().copied().zip(self.counts.iter().copied())
    }

    pub fn sum(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn max(&self) -> u64 {
        self.counts.iter().copied().max().unwrap_or(0)
    }

    /// `Σ r(z)^k`, exact for integer `k`.
    pub fn moment(&self, k: f64) -> Result<EnergyValue> {
        moment_of(&self.counts, k)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("center,count\n");
        for (z, n) in self.iter() {
            out.push_str(&format!("{z},{n}\n"));
        }
        out
    }
}

pub fn fiber_counts(a: &GridSet, b: &GridSet, mode: FiberMode, centers: Centers<'_>, w: u64) -> Result<FiberCounts> {
    let h = PairHistogram::build(a, b, mode)?;
    Ok(match centers {
        Centers::Lattice => h.windowed(w),
        Centers::Explicit(c) => {
            a.check_same_scale(c)?;
            FiberCounts {
                m: a.m(),
                mode,
                window: w,
                explicit_centers: true,
                centers: c.cells().to_vec(),
                counts: h.windowed_at(c.cells(), w),
            }
        }
    })
}

/// Value of an energy: exact for integer exponents, floating otherwise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnergyValue {
    Exact(u128),
    Real(f64),
}

impl EnergyValue {
    pub fn as_f64(self) -> f64 {
        match self {
            EnergyValue::Exact(v) => v as f64,
            EnergyValue::Real(v) => v,
        }
    }

    pub fn exact(self) -> Option<u128> {
        match self {
            EnergyValue::Exact(v) => Some(v),
            EnergyValue::Real(_) => None,
        }
    }
}

impl fmt::Display for EnergyValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnergyValue::Exact(v) => write!(f, "{v}"),
            EnergyValue::Real(v) => write!(f, "{v:e}"),
        }
    }
}

/// Neumaier-compensated sum.
pub(crate) fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

fn moment_of(counts: &[u64], k: f64) -> Result<EnergyValue> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::invalid(format!("energy exponent k = {k} must be positive")));
    }
    if k.fract() == 0.0 && k <= 8.0 {
        let k = k as u32;
        let mut total = 0u128;
        for &r in counts {
            let term = (r as u128)
                .checked_pow(k)
                .ok_or_else(|| Error::domain("energy term overflows u128"))?;
            total = total
                .checked_add(term)
                .ok_or_else(|| Error::domain("energy overflows u128"))?;
        }
        Ok(EnergyValue::Exact(total))
    } else {
        Ok(EnergyValue::Real(compensated_sum(
            counts.iter().map(|&r| (r as f64).powf(k)),
        )))
    }
}

/// `E_k(A, B) = Σ_{z ∈ δℤ} r(z)^k` with window `w`.
pub fn energy(a: &GridSet, b: &GridSet, k: f64, mode: FiberMode, w: u64) -> Result<EnergyValue> {
    fiber_counts(a, b, mode, Centers::Lattice, w)?.moment(k)
}

/// Quadruples `(a, b, a′, b′)` with `|(a ∘ b) − (a′ ∘ b′)| ≤ w`.
pub fn quadruple_count(a: &GridSet, b: &GridSet, mode: FiberMode, w: u64) -> Result<u128> {
    let h = PairHistogram::build(a, b, mode)?;
    Ok(quadruples_from(&h, w))
}

pub(crate) fn quadruples_from(h: &PairHistogram, w: u64) -> u128 {
    let centers: Vec<i64> = h.entries().iter().map(|e| e.0).collect();
    let r = h.windowed_at(&centers, w);
    h.entries().iter().zip(r).map(|(e, r)| e.1 as u128 * r as u128).sum()
}

/// The energies used by the interpolation inequalities, all at one window.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyProfile {
    pub e1: u128,
    pub e3_2: f64,
    pub e7_4: f64,
    pub e2: u128,
    pub e3: u128,
}

/// One interpolation inequality `lhs ≤ rhs`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderCheck {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
}

impl HolderCheck {
    pub fn holds(&self, rel_tol: f64) -> bool {
        self.lhs <= self.rhs * (1.0 + rel_tol)
    }
}

impl EnergyProfile {
    pub fn compute(a: &GridSet, b: &GridSet, mode: FiberMode, w: u64) -> Result<Self> {
        let f = fiber_counts(a, b, mode, Centers::Lattice, w)?;
        let exact = |k: f64| f.moment(k).map(|v| v.exact().expect("integer exponent"));
        Ok(Self {
            e1: exact(1.0)?,
            e3_2: f.moment(1.5)?.as_f64(),
            e7_4: f.moment(1.75)?.as_f64(),
            e2: exact(2.0)?,
            e3: exact(3.0)?,
        })
    }

    pub fn holder_checks(&self) -> [HolderCheck; 4] {
        let (e1, e2, e3) = (self.e1 as f64, self.e2 as f64, self.e3 as f64);
        [
            HolderCheck {
                name: "E2^2 <= E1*E3",
                lhs: e2 * e2,
                rhs: e1 * e3,
            },
            HolderCheck {
                name: "E2 <= E7/4^(4/5)*E3^(1/5)",
                lhs: e2,
                rhs: self.e7_4.powf(0.8) * e3.powf(0.2),
            },
            HolderCheck {
                name: "E3/2 <= E1^(3/4)*E3^(1/4)",
                lhs: self.e3_2,
                rhs: e1.powf(0.75) * e3.powf(0.25),
            },
            HolderCheck {
                name: "E2 <= E1^(1/2)*E3^(1/2)",
                lhs: e2,
                rhs: e1.sqrt() * e3.sqrt(),
            },
        ]
    }

    /// `E₂² ≤ E₁E₃` checked in exact integer arithmetic.
    pub fn cauchy_schwarz_exact(&self) -> bool {
        match (self.e2.checked_mul(self.e2), self.e1.checked_mul(self.e3)) {
            (Some(l), Some(r)) => l <= r,
            _ => (self.e2 as f64).powi(2) <= self.e1 as f64 * self.e3 as f64 * (1.0 + 1e-12),
        }
    }
}

/// Fibers over a maximal separated subset `X` of `A ∘ B`, window 1.
///
/// Holds exactly: `#A·#B ≤ Σ f_X ≤ 3·#A·#B` and `(Σ f_X)² ≤ #X · Σ f_X²`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeparatedFiberChain {
    pub pairs: u64,
    pub separated: u64,
    pub sum: u128,
    pub sum_squares: u128,
}

impl SeparatedFiberChain {
    pub fn compute(a: &GridSet, b: &GridSet, mode: FiberMode) -> Result<Self> {
        let h = PairHistogram::build(a, b, mode)?;
        let x = h.support().maximal_separated_subset();
        let f = h.windowed_at(x.cells(), 1);
        Ok(Self {
            pairs: (a.len() * b.len()) as u64,
            separated: x.len() as u64,
            sum: f.iter().map(|&v| v as u128).sum(),
            sum_squares: f.iter().map(|&v| v as u128 * v as u128).sum(),
        })
    }

    pub fn mass_bounds_hold(&self) -> bool {
        self.pairs as u128 <= self.sum && self.sum <= 3 * self.pairs as u128
    }

    pub fn cauchy_schwarz_holds(&self) -> bool {
        self.sum * self.sum <= self.separated as u128 * self.sum_squares
    }
}

/// Nonnegative rational `num / den`, compared exactly.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Threshold {
    pub num: u128,
    pub den: u128,
}

impl Threshold {
    pub fn new(num: u128, den: u128) -> Result<Self> {
        if den == 0 {
            return Err(Error::invalid("threshold denominator is zero"));
        }
        Ok(Self { num, den })
    }

    pub fn zero() -> Self {
        Self { num: 0, den: 1 }
    }

    /// `count ≥ num/den`.
    pub fn admits(&self, count: u64) -> bool {
        count as u128 * self.den >= self.num
    }

    /// Multiplies by `δ^{e} ≥ 2^{-⌈m·e⌉}`, rounding so the threshold can only
    /// decrease.
    pub fn times_delta_power(self, m: u32, e: f64) -> Self {
        let shift = (m as f64 * e).ceil().max(0.0) as u32;
        Self {
            num: self.num,
            den: self.den << shift,
        }
    }

    pub fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `⌈num/den⌉`, the smallest admitted integer count.
    pub fn ceil(&self) -> u128 {
        self.num.div_ceil(self.den)
    }
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// Base cells whose windowed fibers over `A × B` reach a threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PopularSet {
    pub mode: FiberMode,
    pub window: u64,
    pub threshold: Threshold,
    pub base_len: usize,
    /// `Σ` of fibers over the whole base.
    pub base_mass: u64,
    /// Every base cell meeting the threshold.
    pub selected: GridSet,
    /// Captured pair mass of `selected`.
    pub captured_mass: u64,
    /// The retained cells: `selected`, or its heaviest uniform part.
    pub points: GridSet,
    pub points_mass: u64,
    pub certificate: Option<UniformCertificate>,
}

impl PopularSet {
    /// `captured ≥ #A·#B − #base·threshold`, compared exactly.
    pub fn mass_identity_holds(&self, pairs: u64) -> bool {
        // captured·den ≥ pairs·den − #base·num
        let lhs = self.captured_mass as u128 * self.threshold.den + self.base_len as u128 * self.threshold.num;
        lhs >= pairs as u128 * self.threshold.den
    }
}

/// Selects base cells with fiber count `≥ threshold`; with `refine`, keeps
/// the part of a uniform partition of the selection with the largest mass.
pub fn popular_set(
    a: &GridSet,
    b: &GridSet,
    base: &GridSet,
    mode: FiberMode,
    threshold: Threshold,
    w: u64,
    refine: Option<&UniformityParams>,
) -> Result<PopularSet> {
    a.check_same_scale(base)?;
    let h = PairHistogram::build(a, b, mode)?;
    let fibers = h.windowed_at(base.cells(), w);
    let base_mass = fibers.iter().sum();
    let mut cells = Vec::new();
    let mut captured = 0u64;
    for (&c, &n) in base.cells().iter().zip(&fibers) {
        if threshold.admits(n) {
            cells.push(c);
            captured += n;
        }
    }
    let selected = GridSet::from_sorted_unchecked(base.m(), cells);
    let fiber_of = |x: i64| fibers[base.cells().binary_search(&x).expect("selected ⊆ base")];
    let (points, points_mass, certificate) = match refine {
        Some(params) if !selected.is_empty() => {
            let parts = uniformize::partition_uniform(&selected, params)?;
            let best = parts
                .into_iter()
                .map(|p| {
                    let mass: u64 = p.cells().iter().map(|&x| fiber_of(x)).sum();
                    (p, mass)
                })
                .reduce(|p, q| if q.1 > p.1 { q } else { p })
                .expect("non-empty selection");
            let cert = uniformize::is_uniform(&best.0, params)?
                .certificate()
                .cloned()
                .map(|c| c.with_retained(selected.len()));
            (best.0, best.1, cert)
        }
        _ => (selected.clone(), captured, None),
    };
    Ok(PopularSet {
        mode,
        window: w,
        threshold,
        base_len: base.len(),
        base_mass,
        selected,
        captured_mass: captured,
        points,
        points_mass,
        certificate,
    })
}

/// Translate direction for rich elements: `x − A` or `x + A`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RichSign {
    Minus,
    Plus,
}

/// Elements `x` of `A` whose translate `x ∓ A` meets the `w`-neighborhood of
/// a target in at least `threshold` points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RichSet {
    pub sign: RichSign,
    pub window: u64,
    pub threshold: Threshold,
    pub points: GridSet,
    /// `Σ_{x ∈ A} #((x ∓ A) ∩ N_w(target))`.
    pub total_hits: u64,
}

/// `#((x ∓ A) ∩ N_w(target))` for every `x ∈ A`, in order.
pub fn translate_hits(a: &GridSet, target: &GridSet, sign: RichSign, w: u64) -> Result<Vec<u64>> {
    a.check_same_scale(target)?;
    let nbhd = target.neighborhood(w);
    Ok(a.cells()
        .par_iter()
        .map(|&x| {
            a.cells()
                .iter()
                .filter(|&&y| {
                    nbhd.contains(match sign {
                        RichSign::Minus => x - y,
                        RichSign::Plus => x + y,
                    })
                })
                .count() as u64
        })
        .collect())
}

pub fn rich_elements(a: &GridSet, target: &GridSet, sign: RichSign, threshold: Threshold, w: u64) -> Result<RichSet> {
    let hits = translate_hits(a, target, sign, w)?;
    let points = GridSet::from_sorted_unchecked(
        a.m(),
        a.cells()
            .iter()
            .zip(&hits)
            .filter(|(_, &n)| threshold.admits(n))
            .map(|(&x, _)| x)
            .collect(),
    );
    Ok(RichSet {
        sign,
        window: w,
        threshold,
        points,
        total_hits: hits.iter().sum(),
    })
}

/// Difference cells whose exact fiber over `R₁ × R₂` lies in `[Δ, 2Δ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelSet {
    /// `Δ = 2^class`.
    pub class: u32,
    pub points: GridSet,
    /// `Σ` of fibers over `points`.
    pub mass: u64,
    pub refined: GridSet,
    pub certificate: Option<UniformCertificate>,
}

impl LevelSet {
    pub fn delta(&self) -> f64 {
        (self.class as f64).exp2()
    }

    /// `log₂(Δ^{7/4} · #P_Δ)`.
    pub fn weight_log2(&self) -> f64 {
        1.75 * self.class as f64 + (self.points.len() as f64).log2()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelSets {
    pub levels: Vec<LevelSet>,
    /// Index of `Δ*`, the class maximizing `Δ^{7/4} #P_Δ` (ties to larger Δ).
    pub selected: usize,
}

impl LevelSets {
    pub fn selected(&self) -> &LevelSet {
        &self.levels[self.selected]
    }

    /// `Σ_Δ Δ^{7/4} #P_Δ`.
    pub fn weighted_sum(&self) -> f64 {
        compensated_sum(self.levels.iter().map(|l| l.weight_log2().exp2()))
    }
}

pub fn dyadic_level_sets(r1: &GridSet, r2: &GridSet, params: &UniformityParams) -> Result<LevelSets> {
    let h = PairHistogram::build(r1, r2, FiberMode::Difference)?;
    if h.support_len() == 0 {
        return Err(Error::domain("R1 − R2 is empty"));
    }
    let mut by_class: Vec<(Vec<i64>, u64)> = Vec::new();
    for &(d, n) in h.entries() {
        let k = n.ilog2() as usize;
        if by_class.len() <= k {
            by_class.resize(k + 1, (Vec::new(), 0));
        }
        by_class[k].0.push(d);
        by_class[k].1 += n;
    }
    let mut levels = Vec::new();
    for (k, (cells, mass)) in by_class.into_iter().enumerate() {
        if cells.is_empty() {
            continue;
        }
        let points = GridSet::from_sorted_unchecked(h.m, cells);
        let refined = uniformize::extract_uniform(&points, params)?;
        let certificate = uniformize::is_uniform(&refined, params)?
            .certificate()
            .cloned()
            .map(|c| c.with_retained(points.len()));
        levels.push(LevelSet {
            class: k as u32,
            points,
            mass,
            refined,
            certificate,
        });
    }
    let selected = (0..levels.len())
        .max_by(|&i, &j| {
            let (wi, wj) = (levels[i].weight_log2(), levels[j].weight_log2());
            if (wi - wj).abs() <= 1e-12 * wi.abs().max(1.0) {
                levels[i].class.cmp(&levels[j].class)
            } else {
                wi.partial_cmp(&wj).unwrap_or(Ordering::Equal)
            }
        })
        .expect("non-empty support");
    Ok(LevelSets { levels, selected })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(m: u32, cells: impl IntoIterator<Item = i64>) -> GridSet {
        GridSet::from_cells(m, cells).unwrap()
    }

    fn brute_r(a: &GridSet, b: &GridSet, mode: FiberMode, z: i64, w: i64) -> u64 {
        let mut n = 0;
        for &x in a.cells() {
            for &y in b.cells() {
                if (mode.combine(x, y) - z).abs() <= w {
                    n += 1;
                }
            }
        }
        n
    }

    #[test]
    fn singleton_fibers() {
        let a = set(4, [0]);
        let f = fiber_counts(&a, &a, FiberMode::Difference, Centers::Lattice, 1).unwrap();
        assert_eq!(f.centers, vec![-1, 0, 1]);
        assert_eq!(f.counts, vec![1, 1, 1]);
        assert_eq!(
            energy(&a, &a, 3.0, FiberMode::Difference, 1).unwrap(),
            EnergyValue::Exact(3)
        );
    }

    #[test]
    fn two_point_fibers() {
        let a = set(4, [0, 2]);
        let f = fiber_counts(&a, &a, FiberMode::Difference, Centers::Lattice, 1).unwrap();
        for z in -4..=4 {
            assert_eq!(f.get(z), brute_r(&a, &a, FiberMode::Difference, z, 1), "z = {z}");
        }
        assert_eq!((f.get(0), f.get(2), f.get(-2), f.get(1), f.get(-1)), (2, 1, 1, 3, 3));
    }

    #[test]
    fn sum_mode_fibers() {
        let f = fiber_counts(&set(4, [2]), &set(4, [3]), FiberMode::Sum, Centers::Lattice, 1).unwrap();
        assert_eq!(f.centers, vec![4, 5, 6]);
        assert_eq!(f.sum(), 3);
    }

    #[test]
    fn explicit_centers_keep_zeros() {
        let a = set(5, [1, 4, 9]);
        let c = set(5, [-20, 0, 3, 5]);
        let f = fiber_counts(&a, &a, FiberMode::Difference, Centers::Explicit(&c), 1).unwrap();
        assert_eq!(f.centers, c.cells());
        for (z, n) in f.iter() {
            assert_eq!(n, brute_r(&a, &a, FiberMode::Difference, z, 1));
        }
    }

    #[test]
    fn quadruple_examples() {
        let s = set(3, [5]);
        assert_eq!(quadruple_count(&s, &s, FiberMode::Difference, 1).unwrap(), 1);
        let a = set(4, [0, 2]);
        // differences 0,0,2,-2: only the pair (2, -2) is more than 2 apart
        assert_eq!(quadruple_count(&a, &a, FiberMode::Difference, 2).unwrap(), 14);
        let b = set(6, [3, 7, 8, 30]);
        let c = set(6, [1, 2, 20]);
        for w in 0..4 {
            assert_eq!(
                quadruple_count(&b, &c, FiberMode::Difference, w).unwrap(),
                quadruple_count(&b, &c.negate(), FiberMode::Sum, w).unwrap()
            );
        }
    }

    #[test]
    fn fractional_energy_close_to_direct_sum() {
        let a = set(6, [1, 5, 8, 13, 40, 41]);
        let f = fiber_counts(&a, &a, FiberMode::Sum, Centers::Lattice, 1).unwrap();
        let direct: f64 = f.counts.iter().map(|&r| (r as f64).powf(1.75)).sum();
        let v = f.moment(1.75).unwrap().as_f64();
        assert!((v - direct).abs() <= 1e-12 * direct);
        assert!(f.moment(0.0).is_err());
    }

    #[test]
    fn threshold_arithmetic() {
        let t = Threshold::new(7, 2).unwrap();
        assert!(t.admits(4) && !t.admits(3));
        assert_eq!(t.ceil(), 4);
        assert!(Threshold::new(1, 0).is_err());
        let weak = Threshold::new(100, 1).unwrap().times_delta_power(10, 0.25);
        assert_eq!(weak.den, 8);
    }

    #[test]
    fn popular_set_extremes() {
        let a = set(6, [3, 9, 17, 30, 31, 50]);
        let h = PairHistogram::build(&a, &a, FiberMode::Difference).unwrap();
        let base = h.support().maximal_separated_subset();
        let all = popular_set(&a, &a, &base, FiberMode::Difference, Threshold::zero(), 1, None).unwrap();
        assert_eq!(all.selected, base);
        assert_eq!(all.captured_mass, all.base_mass);
        assert!(all.captured_mass >= 36);
        let none = popular_set(
            &a,
            &a,
            &base,
            FiberMode::Difference,
            Threshold::new(37 * 3, 1).unwrap(),
            1,
            None,
        )
        .unwrap();
        assert!(none.selected.is_empty());
        assert!(none.mass_identity_holds(36));
    }

    #[test]
    fn rich_extremes() {
        let a = set(6, [3, 9, 17, 30]);
        let everything = set(6, -64..64);
        let n = a.len() as u128;
        let full = rich_elements(&a, &everything, RichSign::Minus, Threshold::new(n, 1).unwrap(), 1).unwrap();
        assert_eq!(full.points, a);
        let none = rich_elements(&a, &everything, RichSign::Plus, Threshold::new(n + 1, 1).unwrap(), 1).unwrap();
        assert!(none.points.is_empty());
    }

    #[test]
    fn level_sets_of_singletons() {
        let s = set(4, [9]);
        let p = UniformityParams::with_step(0.1, 4, 2).unwrap();
        let ls = dyadic_level_sets(&s, &s, &p).unwrap();
        assert_eq!(ls.levels.len(), 1);
        assert_eq!(ls.selected().class, 0);
        assert_eq!(ls.selected().points.cells(), &[0]);
        assert!(dyadic_level_sets(&GridSet::empty(4).unwrap(), &s, &p).is_err());
    }

    #[test]
    fn dense_and_sparse_histograms_agree() {
        // spread far enough apart to force the sorting path
        let a = set(40, [0, 1 << 30, (1 << 31) + 5, 7]);
        let b = set(40, [3, 1 << 29, 11]);
        let h = PairHistogram::build(&a, &b, FiberMode::Difference).unwrap();
        assert_eq!(h.total(), 12);
        for &x in a.cells() {
            for &y in b.cells() {
                assert!(h.get(x - y) >= 1);
            }
        }
    }
}
