use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sumprod::experiments::{emit_report, run, ExperimentConfig, Mode, Report};
use sumprod::Error;

#[derive(Parser)]
#[command(
    name = "sumprod",
    version,
    about = "Discretized sum-product experiments at scale 2^-m"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Difference-product chain
    Diffprod(RunArgs),
    /// Sum-product chain
    Sumprod(RunArgs),
    /// Representation and energy bounds
    Energy(RunArgs),
    /// Dyadic contents of the popular differences
    Content(RunArgs),
    /// Incidences against the quasi-product bound
    Incidence(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON config; flags override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    m: Option<u32>,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    /// Seed for random generators
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for report.json, ledger.csv and profile CSVs
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run brute-force cross-checks at any scale
    #[arg(long)]
    brute_check: bool,
    /// Exit with status 2 if a logged slack exponent exceeds this
    #[arg(long)]
    max_slack: Option<f64>,
}

fn build_config(mode: Mode, args: RunArgs) -> Result<ExperimentConfig, Error> {
    let mut config = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    config.mode = mode;
    if let Some(m) = args.m {
        config.m = m;
    }
    if let Some(s) = args.s {
        config.s = s;
    }
    if let Some(eps) = args.eps {
        config.eps = eps;
    }
    if let Some(seed) = args.seed {
        config.generator = config.generator.with_seed(seed);
    }
    if args.out.is_some() {
        config.out = args.out;
    }
    config.brute_check |= args.brute_check;
    if args.max_slack.is_some() {
        config.max_slack = args.max_slack;
    }
    Ok(config)
}

fn summarize(report: &Report) {
    println!("mode: {}", report.mode);
    println!(
        "input: {} cells, {} after uniformization",
        report.input.size, report.input.uniform_size
    );
    for (name, value) in &report.exponents {
        println!("  {name} = {value:.6}");
    }
    let failures: Vec<_> = report.ledger.hard_failures().map(|e| e.name.as_str()).collect();
    println!(
        "hard invariants: {} ({} entries)",
        if failures.is_empty() {
            "pass".to_string()
        } else {
            format!("FAIL {failures:?}")
        },
        report.ledger.entries.len()
    );
    if let Some(slack) = report.ledger.max_log_slack() {
        println!("max log slack: {slack:.4}");
    }
    if !report.flagged.is_empty() {
        println!("flagged: {}", report.flagged.join(", "));
    }
}

fn execute(mode: Mode, args: RunArgs) -> Result<i32, Error> {
    let config = build_config(mode, args)?;
    let report = run(&config)?;
    summarize(&report);
    if let Some(dir) = &config.out {
        for path in emit_report(&report, dir)? {
            println!("wrote {}", path.display());
        }
    }
    Ok(report.exit_code(config.max_slack))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, args) = match cli.command {
        Command::Diffprod(a) => (Mode::DifferenceProduct, a),
        Command::Sumprod(a) => (Mode::SumProduct, a),
        Command::Energy(a) => (Mode::EnergyBounds, a),
        Command::Content(a) => (Mode::ElekesContent, a),
        Command::Incidence(a) => (Mode::IncidenceRatio, a),
    };
    match execute(mode, args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if matches!(e, Error::Hypothesis(_)) { 3 } else { 1 })
        }
    }
}
