use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generators::GeneratorSpec;
use crate::grid::MAX_SCALE;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    DifferenceProduct,
    SumProduct,
    ElekesContent,
    EnergyBounds,
    IncidenceRatio,
}

impl Mode {
    /// The CLI subcommand name.
    pub fn command(self) -> &'static str {
        match self {
            Mode::DifferenceProduct => "diffprod",
            Mode::SumProduct => "sumprod",
            Mode::ElekesContent => "content",
            Mode::EnergyBounds => "energy",
            Mode::IncidenceRatio => "incidence",
        }
    }

    /// Difference-product and sum-product runs require `0 < s ≤ 1/2` and `0 < ε ≤ s/10`.
    pub fn checks_hypotheses(self) -> bool {
        matches!(self, Mode::DifferenceProduct | Mode::SumProduct)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.command())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "diffprod" | "difference_product" => Mode::DifferenceProduct,
            "sumprod" | "sum_product" => Mode::SumProduct,
            "content" | "elekes_content" => Mode::ElekesContent,
            "energy" | "energy_bounds" => Mode::EnergyBounds,
            "incidence" | "incidence_ratio" => Mode::IncidenceRatio,
            other => return Err(Error::invalid(format!("unknown mode '{other}'"))),
        })
    }
}

/// Everything a pipeline run depends on. Loaded from JSON; missing fields
/// take the defaults below.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub generator: GeneratorSpec,
    pub m: u32,
    pub eps: f64,
    /// Nominal dimension of the input set.
    pub s: f64,
    /// Window `w` for fibers, neighborhoods and energies.
    pub window: u64,
    pub tube_width: u64,
    /// Slack exponent of the dyadic level pigeonholing; defaults to `ε/s`.
    pub eta: Option<f64>,
    /// `υ` is taken over scales `δ ≤ ρ ≤ δ^{Cε}` with this `C`.
    pub upsilon_c: f64,
    /// Ladder step for uniformization; defaults to the divisor rule.
    pub uniform_step: Option<u32>,
    /// Run brute-force cross-checks regardless of scale.
    pub brute_check: bool,
    /// Fail the run if a logged slack exponent exceeds this.
    pub max_slack: Option<f64>,
    /// Worker threads; defaults to the rayon global pool.
    pub threads: Option<usize>,
    /// Frostman constants up to `max(δ^{-ε}, this)` pass the hypothesis check.
    pub frostman_floor: f64,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mode: Mode::DifferenceProduct,
            generator: GeneratorSpec::standard_cantor(),
            m: 16,
            eps: 0.02,
            s: 0.5,
            window: 1,
            tube_width: crate::incidence::DEFAULT_TUBE_WIDTH,
            eta: None,
            upsilon_c: 10.0,
            uniform_step: None,
            brute_check: false,
            max_slack: None,
            threads: None,
            frostman_floor: 4.0,
            out: None,
        }
    }
}

impl ExperimentConfig {
    pub fn new(mode: Mode) -> Self {
        Self {
            mode,
            ..Self::default()
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn eta(&self) -> f64 {
        self.eta.unwrap_or(self.eps / self.s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 2 || self.m > MAX_SCALE {
            return Err(Error::invalid(format!("m = {} outside 2..={MAX_SCALE}", self.m)));
        }
        if !(self.s > 0.0 && self.s <= 1.0) {
            return Err(Error::invalid(format!("s = {} outside (0, 1]", self.s)));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::invalid(format!("ε = {} outside (0, 1)", self.eps)));
        }
        if self.mode.checks_hypotheses() {
            if self.s > 0.5 {
                return Err(Error::Hypothesis(format!("s = {} exceeds 1/2", self.s)));
            }
            if self.eps > self.s / 10.0 + 1e-12 {
                return Err(Error::Hypothesis(format!("ε = {} exceeds s/10", self.eps)));
            }
        }
        if self.window == 0 || self.tube_width == 0 {
            return Err(Error::invalid("windows must be ≥ 1"));
        }
        if self.upsilon_c <= 0.0 {
            return Err(Error::invalid("upsilon_c must be positive"));
        }
        if let Some(eta) = self.eta {
            if eta <= 0.0 {
                return Err(Error::invalid("η must be positive"));
            }
        }
        if let Some(t) = self.uniform_step {
            if t == 0 || self.m % t != 0 {
                return Err(Error::invalid(format!("uniform_step {t} must divide m = {}", self.m)));
            }
        }
        if self.threads == Some(0) {
            return Err(Error::invalid("threads must be ≥ 1"));
        }
        Ok(())
    }
}
