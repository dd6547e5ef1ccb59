use std::collections::BTreeMap;

use super::common::{content_exponent, log2, nearest_index, BitRows, Context};
use super::config::ExperimentConfig;
use super::ledger::Ledger;
use super::report::Report;
use crate::energy::{
    energy, popular_set, quadruple_count, rich_elements, EnergyProfile, FiberMode, PairHistogram, RichSign, Threshold,
};
use crate::error::Result;
use crate::grid::GridSet;
use crate::regularity::{branching_profile, dyadic_content, sigma_exponent};

/// Exact counts for the triples `(r, a₁, a₂) ∈ R × A²` with
/// `r − a₁, r − a₂ ∈ N_w(D_pop)` and `a₂ − a₁ ∈ N_w(P)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub(crate) struct TripleCounts {
    pub triples: u64,
    /// `Σ_r (#U_r² + #S₂ − #A²)`, a lower bound for `#X` by
    /// inclusion–exclusion.
    pub inclusion_exclusion: i128,
    /// `#S₂`: pairs with `a₂ − a₁ ∈ N_w(P)`.
    pub near_pairs: u64,
    /// Nonempty boxes `(g(r − a₁), g(r − a₂))`, where `g` maps a value to
    /// its nearest `D_pop` cell.
    pub boxes: u64,
    /// `Σ_boxes (population)²`.
    pub box_energy: u128,
    /// `Σ_boxes population`, equal to `triples`.
    pub box_total: u64,
}

pub(crate) fn triple_counts(a: &GridSet, rich: &GridSet, dpop: &GridSet, p: &GridSet, w: u64) -> TripleCounts {
    let cells = a.cells();
    let n = cells.len();
    let near_p = p.neighborhood(w);
    let mut pair_rows = BitRows::new(n, n);
    for (i, &a1) in cells.iter().enumerate() {
        for (j, &a2) in cells.iter().enumerate() {
            if near_p.contains(a2 - a1) {
                pair_rows.set(i, j);
            }
        }
    }
    let nr = rich.len();
    let mut rows = BitRows::new(nr, n);
    let mut g = vec![u32::MAX; nr * n];
    for (ri, &r) in rich.cells().iter().enumerate() {
        for (j, &x) in cells.iter().enumerate() {
            if let Some(k) = nearest_index(dpop.cells(), r - x, w) {
                g[ri * n + j] = k;
                rows.set(ri, j);
            }
        }
    }
    let near_pairs: u64 = (0..n).map(|i| pair_rows.count(i)).sum();
    let mut out = TripleCounts {
        near_pairs,
        ..TripleCounts::default()
    };
    let mut firsts: Vec<(u32, u32, u32)> = Vec::new();
    for ri in 0..nr {
        let u = rows.count(ri) as i128;
        out.inclusion_exclusion += u * u + near_pairs as i128 - (n * n) as i128;
        for j in 0..n {
            let d1 = g[ri * n + j];
            if d1 != u32::MAX {
                out.triples += rows.and_count(ri, &pair_rows, j);
                firsts.push((d1, ri as u32, j as u32));
            }
        }
    }
    firsts.sort_unstable();
    let mut counter = vec![0u64; dpop.len()];
    let mut touched: Vec<u32> = Vec::new();
    let mut start = 0;
    while start < firsts.len() {
        let d1 = firsts[start].0;
        let mut end = start;
        while end < firsts.len() && firsts[end].0 == d1 {
            let (_, ri, a1) = firsts[end];
            let (ri, a1) = (ri as usize, a1 as usize);
            let base = ri * n;
            for (k, (x, y)) in rows.row(ri).iter().zip(pair_rows.row(a1)).enumerate() {
                let mut bits = x & y;
                while bits != 0 {
                    let j = k * 64 + bits.trailing_zeros() as usize;
                    let d2 = g[base + j] as usize;
                    if counter[d2] == 0 {
                        touched.push(d2 as u32);
                    }
                    counter[d2] += 1;
                    bits &= bits - 1;
                }
            }
            end += 1;
        }
        for &d2 in &touched {
            let c = counter[d2 as usize];
            out.box_energy += c as u128 * c as u128;
            out.box_total += c;
            counter[d2 as usize] = 0;
        }
        out.boxes += touched.len() as u64;
        touched.clear();
        start = end;
    }
    out
}

/// `Σ_t h_R(t) · r_{A,2w}(t)²`, the two-step bound for pairs of triples
/// landing in one box.
pub(crate) fn box_pair_bound(a: &GridSet, rich: &GridSet, w: u64) -> Result<u128> {
    let h_rich = PairHistogram::build(rich, rich, FiberMode::Difference)?;
    let h_a = PairHistogram::build(a, a, FiberMode::Difference)?;
    let centers: Vec<i64> = h_rich.entries().iter().map(|e| e.0).collect();
    let wide = h_a.windowed_at(&centers, 2 * w);
    Ok(h_rich
        .entries()
        .iter()
        .zip(wide)
        .map(|(e, r)| e.1 as u128 * r as u128 * r as u128)
        .sum())
}

/// `#{(d₁, d₂) ∈ D_pop² : d₁ − d₂ ∈ N_{3w}(P)}`.
pub(crate) fn box_bound(dpop: &GridSet, p: &GridSet, w: u64) -> Result<u128> {
    let h = PairHistogram::build(dpop, dpop, FiberMode::Difference)?;
    let near = p.neighborhood(3 * w);
    Ok(h.entries()
        .iter()
        .filter(|e| near.contains(e.0))
        .map(|e| e.1 as u128)
        .sum())
}

pub(crate) fn popular_content_entry(ledger: &mut Ledger, name: &str, set: &GridSet, alpha: f64) -> Result<f64> {
    let relation = format!("1 <= dyadic content of the popular set at alpha = {alpha:.4}");
    match content_exponent(alpha, 1.0) {
        Some(alpha) => {
            let value = dyadic_content(set, alpha)?.value;
            ledger.log_count(name, &relation, 0.0, log2(value));
            Ok(value)
        }
        None => {
            // a nonempty set has content ≥ 1 at a nonpositive exponent
            ledger.log_count(name, &relation, 0.0, 0.0);
            Ok(1.0)
        }
    }
}

pub fn run_difference_product(config: &ExperimentConfig) -> Result<Report> {
    config.validate()?;
    let mut ledger = Ledger::new(config.m);
    let ctx = Context::prepare(config, &mut ledger, true)?;
    let (m, eps, s, w) = (ctx.m, ctx.eps, ctx.s, ctx.w);
    let a = &ctx.a;
    let la = log2(a.len() as f64);
    let ln = log2(ctx.n_products());
    let pairs = a.len() as u128 * a.len() as u128;

    let (d, pop) = ctx.popular_differences(&mut ledger)?;
    let dpop = &pop.points;
    let (ld, ldp) = (log2(d.len() as f64), log2(dpop.len() as f64));
    let sigma = sigma_exponent(dpop, eps)?;
    let rich = rich_elements(
        a,
        dpop,
        RichSign::Minus,
        Threshold::new(a.len() as u128, 1)?.times_delta_power(m, eps),
        w,
    )?;
    let rich = &rich.points;
    ledger.log_count(
        "rich_count",
        "delta^eps #A <= #R_A",
        ctx.delta_pow(eps) + la,
        log2(rich.len() as f64),
    );
    ledger.log_exponent("sigma_at_least_s", "s <= sigma", s, sigma);

    let weak_threshold = Threshold::new(pairs, 100 * d.len() as u128)?.times_delta_power(m, 2.0 * eps);
    let weak = popular_set(a, a, &d, FiberMode::Difference, weak_threshold, w, None)?;
    ledger.hard(
        "weak_popular_mass",
        "captured mass of P >= #A^2 - #D * threshold",
        weak.captured_mass as f64,
        pairs as f64 - d.len() as f64 * weak_threshold.as_f64(),
        weak.mass_identity_holds(pairs as u64),
    );
    let p = &weak.points;

    let e3_a = energy(a, a, 3.0, FiberMode::Difference, w)?.exact().unwrap_or(0);
    let e3_a_wide = energy(a, a, 3.0, FiberMode::Difference, 2 * w)?.exact().unwrap_or(0);
    let prof = EnergyProfile::compute(a, dpop, FiberMode::Difference, w)?;
    let quadruples = quadruple_count(a, dpop, FiberMode::Difference, w)?;
    let incident = (2 * w + 1) as u128 * a.len() as u128 * dpop.len() as u128;
    ledger.hard(
        "pair_energy_count",
        "E1(A, D_pop) = (2w+1) #A #D_pop",
        prof.e1 as f64,
        incident as f64,
        prof.e1 == incident,
    );
    ledger.hard(
        "pair_energy_cauchy_schwarz",
        "E2(A, D_pop)^2 <= E1(A, D_pop) E3(A, D_pop)",
        (prof.e2 as f64).powi(2),
        prof.e1 as f64 * prof.e3 as f64,
        prof.cauchy_schwarz_exact(),
    );
    ledger.hard(
        "quadruples_vs_energy",
        "Q(A, D_pop) <= E2(A, D_pop)",
        quadruples as f64,
        prof.e2 as f64,
        quadruples <= prof.e2,
    );

    let counts = triple_counts(a, rich, dpop, p, w);
    let x = counts.triples as u128;
    ledger.hard(
        "triples_inclusion_exclusion",
        "sum_r (#U_r^2 + #S2 - #A^2) <= #X",
        counts.inclusion_exclusion as f64,
        x as f64,
        counts.inclusion_exclusion <= x as i128,
    );
    ledger.hard_flag(
        "box_partition",
        "box populations sum to #X",
        counts.box_total as u128 == x,
    );
    ledger.hard(
        "triples_cauchy_schwarz",
        "#X^2 <= #boxes * #(pairs of triples sharing a box)",
        (x as f64).powi(2),
        counts.boxes as f64 * counts.box_energy as f64,
        x * x <= counts.boxes as u128 * counts.box_energy,
    );
    let pair_bound = box_pair_bound(a, rich, w)?;
    ledger.hard(
        "box_pairs_by_difference",
        "pairs of triples sharing a box <= sum_t h_R(t) r_A(t; 2w)^2",
        counts.box_energy as f64,
        pair_bound as f64,
        counts.box_energy <= pair_bound,
    );
    ledger.hard(
        "box_pairs_vs_wide_energy",
        "sum_t h_R(t) r_A(t; 2w)^2 <= E3(A; 2w)",
        pair_bound as f64,
        e3_a_wide as f64,
        pair_bound <= e3_a_wide,
    );
    ledger.hard(
        "wide_energy_vs_energy",
        "E3(A; 2w) <= 8 E3(A; w)",
        e3_a_wide as f64,
        8.0 * e3_a as f64,
        e3_a_wide <= 8 * e3_a,
    );
    let y_box = box_bound(dpop, p, w)?;
    ledger.hard(
        "boxes_vs_popular_differences",
        "#boxes <= #{(d1, d2) in D_pop^2 : d1 - d2 in N_3w(P)}",
        counts.boxes as f64,
        y_box as f64,
        counts.boxes as u128 <= y_box,
    );

    let (le3, le3d) = (log2(e3_a as f64), log2(prof.e3 as f64));
    ledger.log_count(
        "triples_lower",
        "delta^(3 eps) #A^3 <= #X",
        ctx.delta_pow(3.0 * eps) + 3.0 * la,
        log2(x as f64),
    );
    ledger.log_count(
        "near_pairs_lower",
        "#A^2 (1 - delta^(2 eps)/100) <= #S2",
        log2(pairs as f64 * (1.0 - (ctx.delta_pow(2.0 * eps)).exp2() / 100.0)),
        log2(counts.near_pairs as f64),
    );
    ledger.log_count(
        "boxes_upper",
        "#boxes <= #D E2(A, D_pop) / (delta^(2 eps) #A^2)",
        log2(counts.boxes as f64),
        ld + log2(prof.e2 as f64) - ctx.delta_pow(2.0 * eps) - 2.0 * la,
    );
    ledger.log_count("energy_upper", "E3(A) <= N(AA)^2 #A", le3, 2.0 * ln + la);
    ledger.log_count(
        "pair_energy_upper",
        "E3(A, D_pop) <= N(AA)^2 N(D_pop)^3 / (#A delta^-sigma)",
        le3d,
        2.0 * ln + 3.0 * ldp - la - sigma * m as f64,
    );
    ledger.log_count(
        "energy_lower",
        "#A^(15/2) <= E3(A) E3(A, D_pop)^(1/2) #D #D_pop^(1/2)",
        7.5 * la,
        le3 + 0.5 * le3d + ld + 0.5 * ldp,
    );
    ledger.log_count(
        "combined",
        "#A^14 delta^-sigma <= #D_pop^4 #D^2 N(AA)^6",
        14.0 * la + sigma * m as f64,
        4.0 * ldp + 2.0 * ld + 6.0 * ln,
    );
    ledger.log_count(
        "general",
        "delta^-sigma #A^14 <= #D^6 N(AA)^6",
        sigma * m as f64 + 14.0 * la,
        6.0 * ld + 6.0 * ln,
    );
    let upsilon = ctx.upsilon;
    let alpha = 2.5 * s - upsilon;
    ledger.log_exponent("sigma_vs_upsilon", "5s/2 - upsilon <= sigma", alpha, sigma);
    popular_content_entry(&mut ledger, "popular_content", dpop, alpha)?;
    ledger.log_count(
        "final_counts",
        "delta^(2 upsilon) #A^33 <= #D^12 N(AA)^12",
        ctx.delta_pow(2.0 * upsilon) + 33.0 * la,
        12.0 * ld + 12.0 * ln,
    );
    let tau = ctx.exponent_of(d.len() as f64);
    let tau_pop = ctx.exponent_of(dpop.len() as f64);
    ledger.log_exponent(
        "final_exponent",
        "33 s <= 12 tau + 14 upsilon",
        33.0 * s,
        12.0 * tau_pop + 14.0 * upsilon,
    );
    let best = tau.max(upsilon);
    ledger.log_exponent("target_5s_over_4", "5s/4 <= max(tau, upsilon)", 1.25 * s, best);
    ledger.log_exponent(
        "target_33s_over_26",
        "33s/26 <= max(tau, upsilon)",
        33.0 * s / 26.0,
        best,
    );

    let exponents = BTreeMap::from([
        ("sigma".to_string(), sigma),
        ("tau_d".to_string(), tau),
        ("tau_dpop".to_string(), tau_pop),
        ("upsilon".to_string(), upsilon),
        ("max_tau_upsilon".to_string(), best),
        ("target_5s_over_4".to_string(), 1.25 * s),
        ("target_33s_over_26".to_string(), 33.0 * s / 26.0),
    ]);
    let profiles = BTreeMap::from([
        ("input".to_string(), branching_profile(a, 1)?),
        ("products".to_string(), branching_profile(&ctx.products, 1)?),
        ("popular".to_string(), branching_profile(dpop, 1)?),
    ]);
    Ok(Report::new(config, ctx.input, exponents, ledger, profiles))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(a: &GridSet, rich: &GridSet, dpop: &GridSet, p: &GridSet, w: u64) -> (u64, u64, u128) {
        let near_d = dpop.neighborhood(w);
        let near_p = p.neighborhood(w);
        let g = |v: i64| {
            dpop.cells()
                .iter()
                .copied()
                .filter(|c| (c - v).unsigned_abs() <= w)
                .min_by_key(|c| ((c - v).abs(), *c))
                .unwrap()
        };
        let mut boxes = std::collections::BTreeMap::new();
        let mut x = 0;
        for &r in rich.cells() {
            for &a1 in a.cells() {
                for &a2 in a.cells() {
                    if near_d.contains(r - a1) && near_d.contains(r - a2) && near_p.contains(a2 - a1) {
                        x += 1;
                        *boxes.entry((g(r - a1), g(r - a2))).or_insert(0u128) += 1;
                    }
                }
            }
        }
        (x, boxes.len() as u64, boxes.values().map(|c| c * c).sum())
    }

    #[test]
    fn triple_counts_match_enumeration() {
        let a = GridSet::from_cells(7, [64, 66, 70, 71, 80, 95, 100, 127]).unwrap();
        let rich = GridSet::from_cells(7, [66, 80, 127]).unwrap();
        let dpop = GridSet::from_cells(7, [-30, -14, -4, 0, 4, 9, 14, 20, 31]).unwrap();
        let p = GridSet::from_cells(7, [-20, -4, 0, 6, 16, 29]).unwrap();
        for w in [1, 2] {
            let c = triple_counts(&a, &rich, &dpop, &p, w);
            let (x, boxes, energy) = brute(&a, &rich, &dpop, &p, w);
            assert_eq!((c.triples, c.boxes, c.box_energy), (x, boxes, energy));
            assert_eq!(c.box_total, x);
        }
    }
}
