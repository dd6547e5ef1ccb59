use sha2::{Digest, Sha256};

use super::config::ExperimentConfig;
use super::ledger::Ledger;
use super::report::InputSummary;
use crate::energy::{popular_set, FiberMode, PairHistogram, PopularSet, Threshold};
use crate::error::{Error, Result};
use crate::grid::{arithmetic, ArithOp, GridSet};
use crate::regularity::{frostman_constant, kt_constant, FrostmanKind};
use crate::uniformize::{extract_uniform, is_uniform, UniformityParams};

pub(crate) fn log2(x: impl Into<f64>) -> f64 {
    x.into().log2()
}

/// Inputs shared by every pipeline: the generated set, its uniform part,
/// the product set and the `υ` exponent.
pub(crate) struct Context {
    pub m: u32,
    pub eps: f64,
    pub s: f64,
    pub w: u64,
    pub params: UniformityParams,
    pub a: GridSet,
    pub products: GridSet,
    pub upsilon: f64,
    pub input: InputSummary,
}

impl Context {
    /// Generates the input, checks the Frostman hypothesis (fatal only when
    /// `enforce` is set) and extracts the uniform subset.
    pub fn prepare(config: &ExperimentConfig, ledger: &mut Ledger, enforce: bool) -> Result<Self> {
        let m = config.m;
        let a0 = config.generator.generate(m)?;
        if a0.len() < 2 {
            return Err(Error::Hypothesis(format!(
                "the input has {} cell(s); at least 2 are needed",
                a0.len()
            )));
        }
        let frostman = frostman_constant(&a0, config.s, FrostmanKind::Set)?;
        let kt = kt_constant(&a0, config.s)?;
        let budget = (config.eps * m as f64).exp2().max(config.frostman_floor);
        ledger.log_count(
            "frostman_hypothesis",
            "C_set(A, s) <= delta^-eps",
            log2(frostman.c_min),
            config.eps * m as f64,
        );
        if enforce && frostman.c_min > budget {
            return Err(Error::Hypothesis(format!(
                "Frostman constant {:.4} at s = {} exceeds the budget {budget:.4} (witness center {}, radius 2^-{})",
                frostman.c_min, config.s, frostman.witness.center, frostman.witness.radius_level
            )));
        }
        let params = match config.uniform_step {
            Some(step) => UniformityParams::with_step(config.eps, m, step)?,
            None => UniformityParams::for_eps(config.eps, m)?,
        };
        let a = extract_uniform(&a0, &params)?;
        let uniform = is_uniform(&a, &params)?.is_uniform();
        ledger.hard_flag("input_uniform", "the extracted subset of A is uniform", uniform);
        ledger.log_count(
            "uniform_retention",
            "delta^eps #A0 <= #A",
            log2(a0.len() as f64) - config.eps * m as f64,
            log2(a.len() as f64),
        );
        ledger.log_count(
            "input_size",
            "#A <= delta^(-eps-s)",
            log2(a.len() as f64),
            (config.eps + config.s) * m as f64,
        );
        let products = arithmetic(&a, &a, ArithOp::Prod)?;
        let upsilon = upsilon(&products, config.eps, config.upsilon_c)?;
        let input = InputSummary {
            size: a0.len(),
            uniform_size: a.len(),
            digest: hex::encode(Sha256::digest(a0.to_text().as_bytes())),
            frostman_constant: frostman.c_min,
            kt_constant: kt,
            products_size: products.len(),
        };
        Ok(Self {
            m,
            eps: config.eps,
            s: config.s,
            w: config.window,
            params,
            a,
            products,
            upsilon,
            input,
        })
    }

    pub fn n_products(&self) -> f64 {
        self.products.len() as f64
    }

    /// `δ^{e}` in `log₂` units.
    pub fn delta_pow(&self, e: f64) -> f64 {
        -e * self.m as f64
    }

    /// `log_{1/δ}` of a count.
    pub fn exponent_of(&self, count: f64) -> f64 {
        count.log2() / self.m as f64
    }

    /// The separated difference set `D` and its refined popular part.
    pub fn popular_differences(&self, ledger: &mut Ledger) -> Result<(GridSet, PopularSet)> {
        let a = &self.a;
        let hist = PairHistogram::build(a, a, FiberMode::Difference)?;
        let d = hist.support().maximal_separated_subset();
        let pairs = (a.len() * a.len()) as u128;
        let threshold = Threshold::new(pairs, 100 * d.len() as u128)?;
        let pop = popular_set(a, a, &d, FiberMode::Difference, threshold, self.w, Some(&self.params))?;
        ledger.hard(
            "popular_difference_mass",
            "captured mass >= #A^2 - #D * threshold",
            pop.captured_mass as f64,
            pairs as f64 - d.len() as f64 * threshold.as_f64(),
            pop.mass_identity_holds(pairs as u64),
        );
        ledger.hard_flag(
            "popular_difference_refined",
            "the refined popular differences are uniform and inside the popular cells",
            pop.certificate.is_some() && pop.points.is_subset_of(&pop.selected) && !pop.points.is_empty(),
        );
        ledger.log_count(
            "popular_difference_captured",
            "delta^eps #A^2 <= fiber mass of the refined popular differences",
            self.delta_pow(self.eps) + log2(pairs as f64),
            log2(pop.points_mass as f64),
        );
        Ok((d, pop))
    }
}

/// `υ = max_j log₂ N_{2^-j}(AA) / j` over `⌈Cεm⌉ ≤ j ≤ m`.
pub fn upsilon(products: &GridSet, eps: f64, c: f64) -> Result<f64> {
    let m = products.m();
    let lo = ((c * eps * m as f64).ceil() as u32).clamp(1, m);
    let mut best = 0.0f64;
    for j in lo..=m {
        let n = products.covering_number(j)? as f64;
        best = best.max(n.log2() / j as f64);
    }
    Ok(best)
}

/// Clamps a content exponent into `(0, cap]`; `None` when it is not positive.
pub(crate) fn content_exponent(alpha: f64, cap: f64) -> Option<f64> {
    (alpha > 0.0).then_some(alpha.min(cap))
}

/// Rows of bits over an index range, one row per key.
pub(crate) struct BitRows {
    words: usize,
    bits: Vec<u64>,
}

impl BitRows {
    pub fn new(rows: usize, width: usize) -> Self {
        let words = width.div_ceil(64).max(1);
        Self {
            words,
            bits: vec![0; rows * words],
        }
    }

    pub fn set(&mut self, row: usize, i: usize) {
        self.bits[row * self.words + i / 64] |= 1 << (i % 64);
    }

    pub fn row(&self, row: usize) -> &[u64] {
        &self.bits[row * self.words..(row + 1) * self.words]
    }

    pub fn count(&self, row: usize) -> u64 {
        self.row(row).iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn and_count(&self, row: usize, other: &BitRows, other_row: usize) -> u64 {
        self.row(row)
            .iter()
            .zip(other.row(other_row))
            .map(|(x, y)| (x & y).count_ones() as u64)
            .sum()
    }
}

/// Index of the element of sorted `set` nearest to `v` within distance `w`,
/// ties to the smaller element.
pub(crate) fn nearest_index(set: &[i64], v: i64, w: u64) -> Option<u32> {
    let i = set.partition_point(|&x| x < v);
    let w = w as i64;
    let below = (i > 0 && v - set[i - 1] <= w).then(|| (v - set[i - 1], i - 1));
    let above = (i < set.len() && set[i] - v <= w).then(|| (set[i] - v, i));
    match (below, above) {
        (Some(b), Some(a)) => Some(if a.0 < b.0 { a.1 } else { b.1 } as u32),
        (Some(b), None) => Some(b.1 as u32),
        (None, Some(a)) => Some(a.1 as u32),
        (None, None) => None,
    }
}
