//! Deterministic test sets: Cantor-type sets, random Frostman sets,
//! arithmetic progressions and unions of these.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSet;
use crate::regularity::kt_constant;

/// Maximum number of independent streams tried by [`random_frostman`].
pub const FROSTMAN_ATTEMPTS: u32 = 64;

/// Points `Σ_{i ≤ ℓ} dᵢ b^{-i}` with `dᵢ ∈ digits`, quantized at scale `m`
/// and, when `shift` is set, moved into `[1/2, 1]` by `x ↦ (1 + x)/2`.
pub fn cantor_set(base: u64, digits: &[u64], levels: u32, m: u32, shift: bool) -> Result<GridSet> {
    if base < 2 {
        return Err(Error::invalid(format!("base {base} must be ≥ 2")));
    }
    let mut digits = digits.to_vec();
    digits.sort_unstable();
    digits.dedup();
    if digits.is_empty() || digits.iter().any(|&d| d >= base) {
        return Err(Error::invalid(format!(
            "digits {digits:?} must be a nonempty subset of 0..{base}"
        )));
    }
    let denom = (base as u128)
        .checked_pow(levels)
        .filter(|&p| p <= 1u128 << m)
        .ok_or_else(|| Error::invalid(format!("{base}^{levels} exceeds 2^{m}")))?;
    let mut numerators = vec![0u128];
    for _ in 0..levels {
        numerators = numerators
            .iter()
            .flat_map(|&n| digits.iter().map(move |&d| n * base as u128 + d as u128))
            .collect();
    }
    let cells = numerators.iter().map(|&n| {
        let c = if shift {
            ((denom + n) << m) / (2 * denom)
        } else {
            (n << m) / denom
        };
        c as i64
    });
    let set = GridSet::from_cells(m, cells)?;
    if set.len() != numerators.len() {
        return Err(Error::invalid(format!(
            "{} digit strings collapse to {} cells at scale {m}",
            numerators.len(),
            set.len()
        )));
    }
    Ok(set)
}

/// Largest `ℓ` with `base^ℓ ≤ 2^m`.
pub fn max_cantor_levels(base: u64, m: u32) -> u32 {
    let mut levels = 0;
    let mut p = 1u128;
    while p * base as u128 <= 1u128 << m {
        p *= base as u128;
        levels += 1;
    }
    levels
}

/// Random dyadic tree with expected branching `2^s`, accepted once its
/// Katz–Tao constant at `s` is at most `m²` and its size lies in
/// `[2^{sm}/m², m²·2^{sm}]`.
///
/// Each child is kept independently with probability `p = 2 − 2^{1−s}`,
/// conditioned on at least one child surviving. Attempt `k` draws from
/// stream `k` of a ChaCha8 generator seeded with `seed`. With `shift` the
/// tree has depth `m − 1` and is placed in `[1/2, 1)`.
pub fn random_frostman(s: f64, m: u32, seed: u64, shift: bool) -> Result<GridSet> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::invalid(format!("s = {s} outside (0, 1]")));
    }
    if m == 0 || (shift && m < 2) {
        return Err(Error::invalid(format!("scale m = {m} too small")));
    }
    let depth = if shift { m - 1 } else { m };
    let offset = if shift { 1i64 << (m - 1) } else { 0 };
    let p = 2.0 - (1.0 - s).exp2();
    let both = p / (2.0 - p);
    let single = (1.0 - p) / (2.0 - p);
    let bound = (m as f64).powi(2);
    let target = (s * m as f64).exp2();
    let mut last = String::new();
    for attempt in 0..FROSTMAN_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(attempt as u64);
        let mut nodes = vec![0i64];
        for _ in 0..depth {
            let mut next = Vec::with_capacity(nodes.len() * 2);
            for &v in &nodes {
                let u: f64 = rng.random();
                if u < both {
                    next.extend([2 * v, 2 * v + 1]);
                } else if u < both + single {
                    next.push(2 * v);
                } else {
                    next.push(2 * v + 1);
                }
            }
            nodes = next;
        }
        let set = GridSet::from_cells(m, nodes.into_iter().map(|v| v + offset))?;
        let kt = kt_constant(&set, s)?;
        let n = set.len() as f64;
        if kt <= bound && n >= target / bound && n <= target * bound {
            return Ok(set);
        }
        last = format!("KT constant {kt:.3} (bound {bound}), size {n} (target {target:.1})");
    }
    Err(Error::Generation {
        attempts: FROSTMAN_ATTEMPTS,
        reason: last,
    })
}

/// `{start + k·step : 0 ≤ k < count}`, which must lie in `[0, 2^m)`.
pub fn ap_set(start: i64, step: i64, count: u64, m: u32) -> Result<GridSet> {
    if step < 1 || count == 0 {
        return Err(Error::invalid("a progression needs step ≥ 1 and count ≥ 1"));
    }
    let last = (count as i128 - 1) * step as i128 + start as i128;
    if start < 0 || last >= 1i128 << m {
        return Err(Error::invalid(format!(
            "progression [{start}, {last}] leaves [0, 2^{m})"
        )));
    }
    GridSet::from_cells(m, (0..count as i64).map(|k| start + k * step))
}

fn default_true() -> bool {
    true
}

/// A generator description, read from experiment configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorSpec {
    Cantor {
        base: u64,
        digits: Vec<u64>,
        /// Digit levels; defaults to the largest `ℓ` with `base^ℓ ≤ 2^m`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        levels: Option<u32>,
        #[serde(default = "default_true")]
        shift: bool,
    },
    RandomFrostman {
        s: f64,
        seed: u64,
        #[serde(default = "default_true")]
        shift: bool,
    },
    Ap {
        start: i64,
        step: i64,
        count: u64,
    },
    Union {
        parts: Vec<GeneratorSpec>,
    },
}

impl GeneratorSpec {
    /// Base-4 Cantor set with digits `{0, 2}` shifted into `[1/2, 1]`.
    pub fn standard_cantor() -> Self {
        GeneratorSpec::Cantor {
            base: 4,
            digits: vec![0, 2],
            levels: None,
            shift: true,
        }
    }

    pub fn generate(&self, m: u32) -> Result<GridSet> {
        match self {
            GeneratorSpec::Cantor {
                base,
                digits,
                levels,
                shift,
            } => cantor_set(
                *base,
                digits,
                levels.unwrap_or_else(|| max_cantor_levels(*base, m)),
                m,
                *shift,
            ),
            GeneratorSpec::RandomFrostman { s, seed, shift } => random_frostman(*s, m, *seed, *shift),
            GeneratorSpec::Ap { start, step, count } => ap_set(*start, *step, *count, m),
            GeneratorSpec::Union { parts } => {
                let mut acc = GridSet::empty(m)?;
                for p in parts {
                    acc = acc.union(&p.generate(m)?)?;
                }
                Ok(acc)
            }
        }
    }

    /// Replaces the seed of a random generator (including inside unions).
    pub fn with_seed(&self, seed: u64) -> Self {
        match self {
            GeneratorSpec::RandomFrostman { s, shift, .. } => GeneratorSpec::RandomFrostman {
                s: *s,
                seed,
                shift: *shift,
            },
            GeneratorSpec::Union { parts } => GeneratorSpec::Union {
                parts: parts.iter().map(|p| p.with_seed(seed)).collect(),
            },
            other => other.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiny_cantor() {
        let unshifted = cantor_set(4, &[0, 2], 1, 2, false).unwrap();
        assert_eq!(unshifted.cells(), &[0, 2]);
        let shifted = cantor_set(4, &[0, 2], 1, 2, true).unwrap();
        assert_eq!(shifted.cells(), &[2, 3]);
    }

    #[test]
    fn cantor_count_and_range() {
        for (b, digits, levels, m) in [(4, vec![0, 2], 8, 16), (3, vec![0, 2], 5, 9), (5, vec![1, 3, 4], 3, 8)] {
            let a = cantor_set(b, &digits, levels, m, true).unwrap();
            assert_eq!(a.len(), digits.len().pow(levels));
            assert!(a.min().unwrap() >= 1 << (m - 1));
            assert!(a.max().unwrap() < 1 << m);
        }
        assert!(cantor_set(4, &[0, 4], 2, 8, false).is_err());
        assert!(cantor_set(4, &[0, 2], 5, 8, false).is_err());
        assert!(cantor_set(1, &[0], 1, 8, false).is_err());
        // adjacent digits collapse after halving
        assert!(cantor_set(4, &[0, 1], 4, 8, true).is_err());
    }

    #[test]
    fn cantor_kt_constant() {
        let a = cantor_set(4, &[0, 2], 8, 16, true).unwrap();
        assert!(kt_constant(&a, 0.5).unwrap() <= 8.0);
    }

    #[test]
    fn full_dimension_frostman_is_an_interval() {
        let a = random_frostman(1.0, 8, 3, false).unwrap();
        assert_eq!(a.len(), 256);
        let shifted = random_frostman(1.0, 8, 3, true).unwrap();
        assert_eq!(shifted.cells(), (128..256).collect::<Vec<_>>());
    }

    #[test]
    fn random_frostman_is_deterministic_and_accepted() {
        let (s, m) = (0.5, 14);
        let a = random_frostman(s, m, 7, true).unwrap();
        assert_eq!(a, random_frostman(s, m, 7, true).unwrap());
        let target = (s * m as f64).exp2();
        let bound = (m * m) as f64;
        assert!(a.len() as f64 >= target / bound && a.len() as f64 <= target * bound);
        assert!(kt_constant(&a, s).unwrap() <= bound);
        assert_ne!(a, random_frostman(s, m, 8, true).unwrap());
    }

    #[test]
    fn progressions() {
        let a = ap_set(1 << 11, 1, 8, 12).unwrap();
        assert_eq!(a.len(), 8);
        assert_eq!(crate::grid::arithmetic(&a, &a, crate::ArithOp::Sum).unwrap().len(), 15);
        assert!(ap_set(4000, 100, 2, 12).is_err());
        assert!(ap_set(0, 0, 2, 12).is_err());
    }

    #[test]
    fn spec_round_trip() {
        let spec = GeneratorSpec::Union {
            parts: vec![
                GeneratorSpec::standard_cantor(),
                GeneratorSpec::Ap {
                    start: 600,
                    step: 3,
                    count: 5,
                },
            ],
        };
        let json = serde_json::to_string(&spec).unwrap();
        assert_eq!(serde_json::from_str::<GeneratorSpec>(&json).unwrap(), spec);
        let a = spec.generate(10).unwrap();
        assert_eq!(a.len(), 32 + 5);
    }
}
