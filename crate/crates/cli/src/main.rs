//! `peltier-ocp`: runs one scenario of the Peltier time-optimal control pipeline
//! and writes its CSV tables plus a manifest into the output directory.

mod config;
mod output;
mod scenarios;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use peltier_core::Error;

use config::{RunConfig, SCENARIOS};
use output::OutDir;
use scenarios::Setup;

#[derive(Debug, Parser)]
#[command(name = "peltier-ocp", version, about = "Scenario runner for two-cylinder Peltier time-optimal control")]
struct Args {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// One of: spectrum, steady, simulate, optimize, sweep, oracle-compare, reproduce-figs.
    #[arg(long)]
    scenario: Option<String>,
    /// Output directory (overrides run.out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Terminal weight (overrides cost.gamma).
    #[arg(long)]
    gamma: Option<f64>,
    /// Horizon T in seconds for optimize and simulate.
    #[arg(long)]
    horizon: Option<f64>,
    /// Number of constant pieces (overrides descent.n_pieces).
    #[arg(long)]
    pieces: Option<usize>,
}

/// Exit statuses.
mod code {
    pub const IO: u8 = 1;
    pub const CONFIG: u8 = 2;
    pub const NUMERICAL: u8 = 3;
    pub const NO_ADMISSIBLE: u8 = 4;
    pub const UNKNOWN_SCENARIO: u8 = 5;
}

enum Failure {
    Config(anyhow::Error),
    UnknownScenario(String),
    Run(anyhow::Error),
}

fn classify_run(e: &anyhow::Error) -> u8 {
    match e.chain().find_map(|c| c.downcast_ref::<Error>()) {
        Some(Error::NoAdmissibleHorizon) => code::NO_ADMISSIBLE,
        Some(Error::InvalidParameter(_) | Error::InvalidControl(_)) => code::CONFIG,
        Some(_) => code::NUMERICAL,
        None if e.chain().any(|c| c.is::<csv::Error>()) => code::CONFIG,
        None => code::IO,
    }
}

fn run(args: Args) -> Result<(), Failure> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path).map_err(Failure::Config)?,
        None => RunConfig::default(),
    };
    if let Some(g) = args.gamma {
        cfg.cost.gamma = g;
    }
    if let Some(n) = args.pieces {
        cfg.descent.n_pieces = n;
    }
    if let Some(h) = args.horizon {
        cfg.optimize.horizon = h;
    }
    let scenario = match args.scenario.clone().or_else(|| cfg.run.scenario.clone()) {
        Some(s) => s,
        None => return Err(Failure::Config(anyhow::anyhow!("no scenario given; expected one of {SCENARIOS:?}"))),
    };
    if !SCENARIOS.contains(&scenario.as_str()) {
        return Err(Failure::UnknownScenario(scenario));
    }
    cfg.validate().map_err(Failure::Config)?;
    let out_dir = args.out.clone().unwrap_or_else(|| cfg.run.out.clone());
    let mut out = OutDir::create(&out_dir).map_err(Failure::Run)?;

    let gamma = cfg.cost.gamma;
    let horizon = cfg.optimize.horizon;
    let result = if scenario == "spectrum" {
        scenarios::spectrum(cfg, &mut out)
    } else {
        let setup = Setup::new(cfg).map_err(Failure::Run)?;
        match scenario.as_str() {
            "steady" => scenarios::steady(&setup, &mut out),
            "simulate" => scenarios::simulate(&setup, args.horizon, &mut out),
            "optimize" => scenarios::optimize(&setup, gamma, horizon, &mut out),
            "sweep" => scenarios::sweep(&setup, gamma, &mut out),
            "oracle-compare" => scenarios::oracle_compare(&setup, &mut out),
            "reproduce-figs" => scenarios::reproduce_figs(&setup, &mut out),
            _ => unreachable!("scenario names are checked above"),
        }
    };
    // tables written before a failure are still listed
    let listed = out.finish().map_err(Failure::Run)?;
    result.map_err(Failure::Run)?;
    println!("wrote {} tables to {}", listed.len(), out_dir.display());
    Ok(())
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(code::CONFIG) } else { ExitCode::SUCCESS };
        }
    };
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e:#}");
            ExitCode::from(code::CONFIG)
        }
        Err(Failure::UnknownScenario(s)) => {
            eprintln!("unknown scenario {s:?}; expected one of {SCENARIOS:?}");
            ExitCode::from(code::UNKNOWN_SCENARIO)
        }
        Err(Failure::Run(e)) => {
            let c = classify_run(&e);
            eprintln!("error: {e:#}");
            ExitCode::from(c)
        }
    }
}
