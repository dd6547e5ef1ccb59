use std::collections::BTreeMap;

use super::common::{log2, Context};
use super::config::ExperimentConfig;
use super::energy_check::{offset_exponent, INSTANCE_LIMIT};
use super::ledger::Ledger;
use super::report::Report;
use crate::energy::{FiberMode, PairHistogram};
use crate::error::{Error, Result};
use crate::incidence::{count_incidences, incidence_bound_rhs, CountMode, RepresentationInstance};
use crate::regularity::branching_profile;

/// Measures incidences of the representation instance over `A × D_pop`
/// against the quasi-product bound.
pub fn run_incidence_ratio(config: &ExperimentConfig) -> Result<Report> {
    config.validate()?;
    let mut ledger = Ledger::new(config.m);
    let ctx = Context::prepare(config, &mut ledger, false)?;
    let (_, pop) = ctx.popular_differences(&mut ledger)?;
    let (a, b) = (&ctx.a, &pop.points);
    if b.is_empty() {
        return Err(Error::domain("no popular differences; the tube family is empty"));
    }
    if (a.len() as u128).pow(2) * b.len() as u128 > INSTANCE_LIMIT {
        return Err(Error::domain(format!(
            "incidence instance with #A = {} and #B = {} is too large; lower m",
            a.len(),
            b.len()
        )));
    }
    let (m, s, w) = (ctx.m, ctx.s, ctx.w);
    let t = offset_exponent(b, s, ctx.eps)?;
    let c = PairHistogram::build(a, b, FiberMode::Difference)?
        .support()
        .maximal_separated_subset();
    let inst = RepresentationInstance::build(a, b, &c, w, config.tube_width, s, t, CountMode::Grid)?;
    let inc = inst.incidences.incidences;
    let shaded = inst.shading.total();
    ledger.hard(
        "incidences_vs_shading",
        "incidences <= sum_T #Y(T)",
        inc as f64,
        shaded as f64,
        inc <= shaded,
    );
    let geometric = inst
        .family
        .tubes()
        .zip(&inst.shading.cells)
        .all(|(tube, cells)| cells.iter().all(|&cell| tube.contains(m, config.tube_width, cell)));
    ledger.hard_flag("shading_in_tubes", "every shaded cell meets its tube", geometric);
    ledger.hard_flag(
        "shading_in_points",
        "every shaded cell is a point",
        inst.incidences.dropped == 0,
    );
    if config.brute_check || inst.family.len() as u128 * inst.points.len() as u128 <= 400_000_000 {
        let slow = count_incidences(&inst.points, &inst.family, &inst.shading, CountMode::Brute)?;
        ledger.hard(
            "incidences_brute",
            "grid incidence count = brute incidence count",
            inc as f64,
            slow.incidences as f64,
            slow == inst.incidences,
        );
    }
    let union = inst.shading.union(m)?.len() as u64;
    let rhs = incidence_bound_rhs(
        m,
        inst.family.len() as u64,
        union,
        s,
        t,
        inst.family.k1,
        inst.family.k2,
        inst.shading.k3,
    );
    ledger.log_count(
        "quasi_product_bound",
        "incidences <= K3^(1/3) (K1 K2)^(2/3) (delta^(-s-t) #T)^(1/3) #Y^(2/3)",
        log2(inc as f64),
        log2(rhs),
    );
    let ratio = inc as f64 / rhs;
    let exponents = BTreeMap::from([
        ("s".to_string(), s),
        ("t".to_string(), t),
        ("k1".to_string(), inst.family.k1),
        ("k2".to_string(), inst.family.k2),
        ("k3".to_string(), inst.shading.k3),
        ("ratio".to_string(), ratio),
        ("ratio_exponent".to_string(), log2(ratio) / m as f64),
    ]);
    let profiles = BTreeMap::from([
        ("input".to_string(), branching_profile(a, 1)?),
        ("popular".to_string(), branching_profile(b, 1)?),
    ]);
    Ok(Report::new(config, ctx.input, exponents, ledger, profiles))
}
