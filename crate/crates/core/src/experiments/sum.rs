use std::collections::BTreeMap;

use super::common::{log2, BitRows, Context};
use super::config::ExperimentConfig;
use super::difference::popular_content_entry;
use super::ledger::Ledger;
use super::report::Report;
use crate::energy::{
    dyadic_level_sets, energy, popular_set, quadruple_count, rich_elements, EnergyProfile, FiberMode, PairHistogram,
    RichSign, SeparatedFiberChain, Threshold,
};
use crate::error::Result;
use crate::grid::GridSet;
use crate::regularity::{branching_profile, kt_constant, sigma_exponent};

const HOLDER_TOLERANCE: f64 = 1e-9;

/// Triples `(r₁, r₂, a)` with `r₁ + a ∈ N_w(S_pop)`, `r₂ + a ∈ N_w(P₊)` and
/// `r₁ − r₂ ∈ N_w(P′)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub(crate) struct SumTriples {
    pub triples: u64,
    /// `Σ_{(r₁,r₂)} (#A₁ + #A₂ − #A)` over the admissible pairs.
    pub inclusion_exclusion: i128,
    /// Pairs `(r₁, r₂)` with `r₁ − r₂ ∈ N_w(P′)`.
    pub level_pairs: u64,
}

pub(crate) fn sum_triples(
    a: &GridSet,
    r1: &GridSet,
    r2: &GridSet,
    spop: &GridSet,
    plus: &GridSet,
    level: &GridSet,
    w: u64,
) -> SumTriples {
    let n = a.len();
    let rows_for = |rich: &GridSet, target: &GridSet| {
        let near = target.neighborhood(w);
        let mut rows = BitRows::new(rich.len(), n);
        for (i, &r) in rich.cells().iter().enumerate() {
            for (j, &x) in a.cells().iter().enumerate() {
                if near.contains(r + x) {
                    rows.set(i, j);
                }
            }
        }
        rows
    };
    let first = rows_for(r1, spop);
    let second = rows_for(r2, plus);
    let near_level = level.neighborhood(w);
    let mut out = SumTriples::default();
    for (i, &x) in r1.cells().iter().enumerate() {
        let c1 = first.count(i) as i128;
        for (j, &y) in r2.cells().iter().enumerate() {
            if near_level.contains(x - y) {
                out.level_pairs += 1;
                out.triples += first.and_count(i, &second, j);
                out.inclusion_exclusion += c1 + second.count(j) as i128 - n as i128;
            }
        }
    }
    out
}

/// `log₂` of the left side of the sum lower bound:
/// `δ^{−σ/5} #A^{11/2 − η}`.
fn sum_bound_lhs(m: u32, sigma: f64, la: f64, eta: f64) -> f64 {
    sigma * m as f64 / 5.0 + (5.5 - eta) * la
}

pub fn run_sum_product(config: &ExperimentConfig) -> Result<Report> {
    config.validate()?;
    let mut ledger = Ledger::new(config.m);
    let ctx = Context::prepare(config, &mut ledger, true)?;
    let (m, eps, s, w) = (ctx.m, ctx.eps, ctx.s, ctx.w);
    let mf = m as f64;
    let a = &ctx.a;
    let na = a.len() as u128;
    let pairs = na * na;
    let la = log2(na as f64);
    let ln = log2(ctx.n_products());

    let sums = PairHistogram::build(a, a, FiberMode::Sum)?;
    let sset = sums.support().maximal_separated_subset();
    let ls = log2(sset.len() as f64);
    let threshold = Threshold::new(pairs, 100 * sset.len() as u128)?;
    let pop = popular_set(a, a, &sset, FiberMode::Sum, threshold, w, Some(&ctx.params))?;
    ledger.hard(
        "popular_sum_mass",
        "captured mass >= #A^2 - #S * threshold",
        pop.captured_mass as f64,
        pairs as f64 - sset.len() as f64 * threshold.as_f64(),
        pop.mass_identity_holds(pairs as u64),
    );
    ledger.hard_flag(
        "popular_sum_refined",
        "the refined popular sums are uniform and inside the popular cells",
        pop.certificate.is_some() && pop.points.is_subset_of(&pop.selected) && !pop.points.is_empty(),
    );
    ledger.log_count(
        "popular_sum_captured",
        "delta^eps #A^2 <= fiber mass of the refined popular sums",
        ctx.delta_pow(eps) + 2.0 * la,
        log2(pop.points_mass as f64),
    );
    let spop = &pop.points;
    let lsp = log2(spop.len() as f64);
    let sigma = sigma_exponent(spop, eps)?;
    let mass = pop.points_mass as u128;

    // c = mass / #A²
    let r1 = rich_elements(
        a,
        spop,
        RichSign::Plus,
        Threshold::new(mass, na)?.times_delta_power(m, eps),
        w,
    )?
    .points;
    let plus_threshold = Threshold::new(mass, 4 * sset.len() as u128)?.times_delta_power(m, eps);
    let plus = popular_set(a, a, &sset, FiberMode::Sum, plus_threshold, w, None)?;
    ledger.hard(
        "weak_popular_sum_mass",
        "captured mass of P+ >= #A^2 - #S * threshold",
        plus.captured_mass as f64,
        pairs as f64 - sset.len() as f64 * plus_threshold.as_f64(),
        plus.mass_identity_holds(pairs as u64),
    );
    // (1 − c δ^ε / 2) #A with δ^ε rounded up to 2^{-⌊εm⌋}
    let k = (eps * mf).floor() as u32;
    let den = (2 * na) << k;
    let r2_threshold = Threshold::new(((2 * pairs) << k).saturating_sub(mass), den)?;
    let r2 = rich_elements(a, &plus.points, RichSign::Plus, r2_threshold, w)?.points;
    ledger.log_count(
        "first_rich_count",
        "delta^eps #A <= #R1",
        ctx.delta_pow(eps) + la,
        log2(r1.len() as f64),
    );
    ledger.log_count(
        "second_rich_count",
        "delta^eps #A <= #R2",
        ctx.delta_pow(eps) + la,
        log2(r2.len() as f64),
    );

    let e3_a = energy(a, a, 3.0, FiberMode::Difference, w)?.exact().unwrap_or(0);
    let e3_spop = energy(a, spop, 3.0, FiberMode::Difference, w)?.as_f64();
    let (le3, le3s) = (log2(e3_a as f64), log2(e3_spop));
    ledger.log_count("energy_upper", "E3(A) <= N(AA)^2 #A", le3, 2.0 * ln + la);
    ledger.log_count(
        "sum_energy_upper",
        "E3(A, S_pop) <= N(AA)^2 N(S_pop)^3 / (#A delta^-sigma)",
        le3s,
        2.0 * ln + 3.0 * lsp - la - sigma * mf,
    );
    let upsilon = ctx.upsilon;
    let alpha = 2.5 * s - upsilon;
    ledger.log_exponent("sigma_vs_upsilon", "5s/2 - upsilon <= sigma", alpha, sigma);
    popular_content_entry(&mut ledger, "popular_content", spop, alpha)?;

    let mut exponents = BTreeMap::new();
    let mut profiles = BTreeMap::from([
        ("input".to_string(), branching_profile(a, 1)?),
        ("products".to_string(), branching_profile(&ctx.products, 1)?),
        ("popular".to_string(), branching_profile(spop, 1)?),
    ]);

    if !r1.is_empty() && !r2.is_empty() {
        let levels = dyadic_level_sets(&r1, &r2, &ctx.params)?;
        let sel = levels.selected();
        let class = sel.class as f64;
        let level = &sel.points;
        let refined = &sel.refined;
        let lp = log2(level.len() as f64);
        let total = levels.weighted_sum();
        let rich = EnergyProfile::compute(&r1, &r2, FiberMode::Difference, w)?;
        let spread = (2.0 * (2 * w + 1) as f64).powf(1.75);
        ledger.hard(
            "level_sum_lower",
            "sum_Delta Delta^(7/4) #P_Delta <= E7/4(R1, R2)",
            total,
            rich.e7_4,
            total <= rich.e7_4 * (1.0 + HOLDER_TOLERANCE),
        );
        ledger.hard(
            "level_sum_upper",
            "E7/4(R1, R2) <= (2(2w+1))^(7/4) sum_Delta Delta^(7/4) #P_Delta",
            rich.e7_4,
            spread * total,
            rich.e7_4 <= spread * total * (1.0 + HOLDER_TOLERANCE),
        );
        let top = sel.weight_log2().exp2();
        ledger.hard(
            "level_pigeonhole",
            "sum_Delta Delta^(7/4) #P_Delta <= #levels * Delta*^(7/4) #P_Delta*",
            total,
            levels.levels.len() as f64 * top,
            total <= levels.levels.len() as f64 * top * (1.0 + HOLDER_TOLERANCE),
        );
        ledger.hard_flag(
            "level_refined",
            "the refined level set is uniform and inside the level set",
            sel.certificate.is_some() && refined.is_subset_of(level) && !refined.is_empty(),
        );
        let h_rich = PairHistogram::build(&r1, &r2, FiberMode::Difference)?;
        let h_a = PairHistogram::build(a, a, FiberMode::Difference)?;
        let pointwise = h_rich.entries().iter().all(|&(d, n)| n <= h_a.get(d));
        ledger.hard_flag(
            "rich_fibers_pointwise",
            "r_{R1,R2}(d) <= r_{A,A}(d) for every d",
            pointwise,
        );
        ledger.hard(
            "rich_energy_vs_energy",
            "E3(R1, R2) <= E3(A)",
            rich.e3 as f64,
            e3_a as f64,
            rich.e3 <= e3_a,
        );
        for (i, check) in rich.holder_checks().iter().enumerate() {
            ledger.hard(
                &format!("rich_holder_{}", i + 1),
                &format!("{} on (R1, R2)", check.name),
                check.lhs,
                check.rhs,
                check.holds(HOLDER_TOLERANCE),
            );
        }
        let negated = refined.negate();
        let against = EnergyProfile::compute(a, &negated, FiberMode::Difference, w)?;
        let three_halves = against.holder_checks()[2];
        ledger.hard(
            "level_holder",
            "E3/2 <= E1^(3/4) E3^(1/4) on (A, -P')",
            three_halves.lhs,
            three_halves.rhs,
            three_halves.holds(HOLDER_TOLERANCE),
        );

        let chain = SeparatedFiberChain::compute(&r1, &r2, FiberMode::Sum)?;
        ledger.hard(
            "separated_fiber_mass",
            "#R1 #R2 <= sum f_X <= 3 #R1 #R2",
            chain.sum as f64,
            3.0 * chain.pairs as f64,
            chain.mass_bounds_hold(),
        );
        ledger.hard(
            "separated_fiber_cauchy_schwarz",
            "(sum f_X)^2 <= #X sum f_X^2",
            (chain.sum as f64).powi(2),
            chain.separated as f64 * chain.sum_squares as f64,
            chain.cauchy_schwarz_holds(),
        );
        let e2_sum = energy(&r1, &r2, 2.0, FiberMode::Sum, 1)?.exact().unwrap_or(0);
        ledger.hard(
            "separated_fiber_energy",
            "sum f_X^2 <= E2+(R1, R2; 1)",
            chain.sum_squares as f64,
            e2_sum as f64,
            chain.sum_squares <= e2_sum,
        );
        let q_sum = quadruple_count(&r1, &r2, FiberMode::Sum, 2)?;
        let q_diff = quadruple_count(&r1, &r2, FiberMode::Difference, 2)?;
        ledger.hard(
            "sum_energy_vs_quadruples",
            "E2+(R1, R2; 1) <= 3 Q+(R1, R2; 2)",
            e2_sum as f64,
            3.0 * q_sum as f64,
            e2_sum <= 3 * q_sum,
        );
        ledger.hard(
            "quadruple_symmetry",
            "Q+(R1, R2; 2) = Q-(R1, R2; 2)",
            q_sum as f64,
            q_diff as f64,
            q_sum == q_diff,
        );
        let e2_wide = energy(&r1, &r2, 2.0, FiberMode::Difference, 2)?.exact().unwrap_or(0);
        ledger.hard(
            "quadruples_vs_wide_energy",
            "Q-(R1, R2; 2) <= E2(R1, R2; 2)",
            q_diff as f64,
            e2_wide as f64,
            q_diff <= e2_wide,
        );
        ledger.log_count(
            "rich_energy_lower",
            "delta^(4 eps) #A^4 / #S <= E2(R1, R2)",
            ctx.delta_pow(4.0 * eps) + 4.0 * la - ls,
            log2(rich.e2 as f64),
        );
        let eta = config.eta();
        ledger.log_count(
            "level_pigeonhole_weight",
            "E7/4(R1, R2) <= #A^eta Delta^(7/4) #P_Delta",
            log2(rich.e7_4),
            eta * la + sel.weight_log2(),
        );
        let kt = kt_constant(refined, s)?;
        ledger.log_count("level_kt", "KT(P', s) <= #A / Delta", log2(kt), la - class);
        ledger.log_count(
            "level_uniform_size",
            "delta^eps #P_Delta <= #P'",
            ctx.delta_pow(eps) + lp,
            log2(refined.len() as f64),
        );
        ledger.log_count(
            "level_energy_upper",
            "E3(A, -P') <= delta^(-2s) N(AA)^2 #P_Delta / Delta^2",
            log2(against.e3 as f64),
            2.0 * s * mf + 2.0 * ln + lp - 2.0 * class,
        );

        let triples = sum_triples(a, &r1, &r2, spop, &plus.points, refined, w);
        ledger.hard(
            "triples_inclusion_exclusion",
            "sum over level pairs of (#A1 + #A2 - #A) <= #X",
            triples.inclusion_exclusion as f64,
            triples.triples as f64,
            triples.inclusion_exclusion <= triples.triples as i128,
        );
        let level_mass = (1u128 << sel.class) * refined.len() as u128;
        ledger.hard(
            "level_pairs",
            "Delta #P' <= #{(r1, r2) : r1 - r2 in N_w(P')}",
            level_mass as f64,
            triples.level_pairs as f64,
            level_mass <= triples.level_pairs as u128,
        );
        ledger.log_count(
            "triples_lower",
            "delta^eps Delta #P_Delta #A <= #X",
            ctx.delta_pow(eps) + class + lp + la,
            log2(triples.triples as f64),
        );
        let solutions = PairHistogram::build(spop, &plus.points, FiberMode::Difference)?;
        let boxes: u64 = solutions.windowed_at(refined.cells(), w).iter().sum();
        let lb = log2(boxes as f64);
        ledger.log_count(
            "post_cauchy_schwarz",
            "Delta^2 #P_Delta^2 #A^2 <= E3(A) #Y",
            2.0 * class + 2.0 * lp + 2.0 * la,
            le3 + lb,
        );
        let l32 = log2(against.e3_2);
        ledger.log_count(
            "boxes_upper",
            "#Y <= #S E3/2(A, -P')^(2/3) E3(A, S_pop)^(1/3) / (#A^2 delta^eps)",
            lb,
            ls + 2.0 / 3.0 * l32 + le3s / 3.0 - 2.0 * la - ctx.delta_pow(eps),
        );
        ledger.log_count(
            "three_halves_upper",
            "E3/2(A, -P')^(2/3) <= #A^(1/2) #P_Delta^(2/3) delta^(-s/3) N(AA)^(1/3) / Delta^(1/3)",
            2.0 / 3.0 * l32,
            0.5 * la + 2.0 / 3.0 * lp + s * mf / 3.0 + ln / 3.0 - class / 3.0,
        );
        ledger.log_count(
            "level_display",
            "Delta^(7/3) #P_Delta^(4/3) <= #S #A^(-17/6) N(AA)^3 N(S_pop) delta^((sigma - s)/3)",
            7.0 / 3.0 * class + 4.0 / 3.0 * lp,
            ls - 17.0 / 6.0 * la + 3.0 * ln + lsp + (s - sigma) * mf / 3.0,
        );
        ledger.log_count(
            "rich_energy_upper",
            "E2(R1, R2) <= #A^eta #S^(3/5) N(AA)^(11/5) N(S_pop)^(3/5) delta^((sigma - s)/5) / #A^(3/2)",
            log2(rich.e2 as f64),
            eta * la + 0.6 * ls + 2.2 * ln + 0.6 * lsp + (s - sigma) * mf / 5.0 - 1.5 * la,
        );
        let rhs = s * mf / 5.0 + 2.2 * ls + 2.2 * ln;
        let lhs = sum_bound_lhs(m, sigma, la, eta);
        ledger.log_count(
            "sum_lower",
            "delta^(-sigma/5) #A^(11/2 - eta) <= delta^(-s/5) N(A+A)^(11/5) N(AA)^(11/5)",
            lhs,
            rhs,
        );
        let shift = lhs - sum_bound_lhs(m, sigma, la, 2.0 * eta);
        ledger.hard(
            "eta_sensitivity",
            "doubling eta divides the left side by exactly #A^eta",
            shift,
            eta * la,
            (shift - eta * la).abs() <= 1e-9 * lhs.abs().max(1.0),
        );
        exponents.insert("level_class".to_string(), class);
        exponents.insert("level_kt_slack".to_string(), (log2(kt) - (la - class)) / mf);
        profiles.insert("level".to_string(), branching_profile(refined, 1)?);
    }

    ledger.log_count(
        "final_counts",
        "delta^(-s/2 + upsilon/5) #A^(11/2) <= delta^(-s/5) N(A+A)^(11/5) N(AA)^(11/5)",
        (s / 2.0 - upsilon / 5.0) * mf + 5.5 * la,
        s * mf / 5.0 + 2.2 * ls + 2.2 * ln,
    );
    let tau = ctx.exponent_of(sset.len() as f64);
    ledger.log_exponent(
        "final_exponent",
        "29s/5 <= 11 tau/5 + 12 upsilon/5",
        29.0 * s / 5.0,
        2.2 * tau + 2.4 * upsilon,
    );
    let best = tau.max(upsilon);
    ledger.log_exponent(
        "target_29s_over_23",
        "29s/23 <= max(tau, upsilon)",
        29.0 * s / 23.0,
        best,
    );

    exponents.extend([
        ("sigma".to_string(), sigma),
        ("tau_s".to_string(), tau),
        ("tau_spop".to_string(), ctx.exponent_of(spop.len() as f64)),
        ("upsilon".to_string(), upsilon),
        ("max_tau_upsilon".to_string(), best),
        ("target_29s_over_23".to_string(), 29.0 * s / 23.0),
    ]);
    Ok(Report::new(config, ctx.input, exponents, ledger, profiles))
}
