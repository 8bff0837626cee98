use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use ehs_cnoma::cli::{
    parse_metric_list, parse_protocol_list, run_sweep_detailed, write_csv, write_csv_file,
    ConfigFile, SweepVariable,
};

/// Sweep ergodic sum capacity, outage probability and energy efficiency of the
/// enhanced hybrid SWIPT cooperative NOMA downlink against the HS baseline.
#[derive(Debug, Parser)]
#[command(name = "ehs-cnoma", version)]
struct Args {
    /// `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Swept variable: snr (dB), alpha or d1.
    #[arg(long)]
    sweep: Option<SweepVariable>,
    #[arg(long, allow_negative_numbers = true)]
    start: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    stop: Option<f64>,
    #[arg(long)]
    step: Option<f64>,
    /// ehs-mrc, hs-sc or both.
    #[arg(long)]
    protocol: Option<String>,
    /// esc, op, ee, all, or a comma-separated list.
    #[arg(long)]
    metrics: Option<String>,
    /// Monte-Carlo trials per sweep point and protocol.
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (results do not depend on this).
    #[arg(long)]
    workers: Option<usize>,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Compare simulated metrics against the closed forms; exit 1 if an
    /// exact closed form disagrees by more than 3 standard errors.
    #[arg(long)]
    validate: bool,
}

const EXIT_VALIDATION: u8 = 1;
const EXIT_USAGE: u8 = 2;

fn run(args: Args) -> Result<bool, String> {
    let mut file = match &args.config {
        Some(path) => {
            let text =
                std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            ConfigFile::parse(&text).map_err(|e| format!("{}: {e}", path.display()))?
        }
        None => ConfigFile::default(),
    };

    if let Some(variable) = args.sweep {
        if file.sweep.variable != Some(variable) {
            // a range written for another variable does not carry over
            file.sweep.start = None;
            file.sweep.stop = None;
            file.sweep.step = None;
        }
        file.sweep.variable = Some(variable);
    }
    file.sweep.start = args.start.or(file.sweep.start);
    file.sweep.stop = args.stop.or(file.sweep.stop);
    file.sweep.step = args.step.or(file.sweep.step);
    if let Some(list) = &args.protocol {
        file.sweep.protocols =
            Some(parse_protocol_list(list).map_err(|e| format!("--protocol: {e}"))?);
    }
    if let Some(list) = &args.metrics {
        file.sweep.metrics = Some(parse_metric_list(list).map_err(|e| format!("--metrics: {e}"))?);
    }
    if let Some(trials) = args.trials {
        file.estimator.trials = trials;
    }
    if let Some(seed) = args.seed {
        file.estimator.seed = seed;
    }
    file.estimator.workers = args.workers;

    let (params, cfg, spec) = file.resolve().map_err(|e| e.to_string())?;
    let output =
        run_sweep_detailed(&spec, &params, &cfg, args.validate).map_err(|e| e.to_string())?;

    match &args.out {
        Some(path) => {
            write_csv_file(&output.rows, path).map_err(|e| format!("{}: {e}", path.display()))?
        }
        None => write_csv(&output.rows, io::stdout().lock()).map_err(|e| e.to_string())?,
    }

    if args.validate {
        for (value, report) in &output.reports {
            eprintln!("{} = {value}", spec.variable);
            eprint!("{report}");
        }
    }
    Ok(!output.has_failures())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("validation failed: an exact closed form disagrees with the simulation");
            ExitCode::from(EXIT_VALIDATION)
        }
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
