use std::collections::BTreeMap;

use super::common::{log2, Context};
use super::config::ExperimentConfig;
use super::difference::popular_content_entry;
use super::ledger::Ledger;
use super::report::Report;
use crate::error::{Error, Result};
use crate::grid::GridSet2D;
use crate::regularity::{branching_profile, dyadic_content_2d};

/// Largest product set handed to the planar content recursion.
const PLANAR_LIMIT: u128 = 1 << 26;

/// Dyadic contents of `D_pop × AA` at `5s/2` and of `D_pop` at `5s/2 − υ`.
/// Both are log-only.
pub fn run_elekes_content(config: &ExperimentConfig) -> Result<Report> {
    config.validate()?;
    let mut ledger = Ledger::new(config.m);
    let ctx = Context::prepare(config, &mut ledger, false)?;
    let (_, pop) = ctx.popular_differences(&mut ledger)?;
    let dpop = &pop.points;
    let cells = dpop.len() as u128 * ctx.products.len() as u128;
    if cells > PLANAR_LIMIT {
        return Err(Error::domain(format!(
            "D_pop x AA has {cells} cells, above the limit {PLANAR_LIMIT}; lower m"
        )));
    }
    let s = ctx.s;
    let planar_alpha = (2.5 * s).min(2.0);
    let planar = dyadic_content_2d(&GridSet2D::product(dpop, &ctx.products)?, planar_alpha)?;
    ledger.log_count(
        "planar_content",
        &format!("1 <= dyadic content of D_pop x AA at alpha = {planar_alpha:.4}"),
        0.0,
        log2(planar.value),
    );
    let alpha = 2.5 * s - ctx.upsilon;
    let line = popular_content_entry(&mut ledger, "popular_content", dpop, alpha)?;
    let m = ctx.m as f64;
    let exponents = BTreeMap::from([
        ("planar_alpha".to_string(), planar_alpha),
        ("planar_content".to_string(), planar.value),
        ("planar_content_exponent".to_string(), -log2(planar.value) / m + 0.0),
        ("alpha".to_string(), alpha),
        ("content".to_string(), line),
        ("content_exponent".to_string(), -log2(line) / m + 0.0),
        ("upsilon".to_string(), ctx.upsilon),
    ]);
    let profiles = BTreeMap::from([
        ("input".to_string(), branching_profile(&ctx.a, 1)?),
        ("popular".to_string(), branching_profile(dpop, 1)?),
    ]);
    Ok(Report::new(config, ctx.input, exponents, ledger, profiles))
}
