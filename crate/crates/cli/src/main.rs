// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use edms_cli::suite::{bundled_suite, write_suite};
use edms_cli::{
    cmd_report, cmd_run, cmd_synth, cmd_validate, configure_threads, parse_schedule, CliError,
    ExperimentConfig, Method, Overrides, Result, EXIT_CONFIG, EXIT_OK,
};
use edms_core::eval::MapeDenominator;
use edms_core::synth::{SynthKind, SynthSpec};
use edms_core::timeseries::Frequency;

#[derive(Parser)]
#[command(name = "edms", version, about = "Ensembled direct multi-step forecasting experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load, align and prune a panel without forecasting.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Forecast the holdout with EIMS, EDMS or both and write run artifacts.
    Run(RunArgs),
    /// Merge `both` runs into per-frequency tables and plot CSVs.
    Report {
        #[arg(required = true)]
        runs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic panel, or the bundled suite with `--suite`.
    Synth(SynthArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "both")]
    method: Method,
    /// Comma-separated retrain steps; `none` disables retraining.
    #[arg(long)]
    schedule: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    mape_denominator: Option<MapeDenominator>,
    #[arg(long)]
    global_lstm: bool,
    /// Additive average growth instead of the multiplicative default.
    #[arg(long)]
    additive_growth: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// Output CSV, or the suite directory with `--suite`.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    suite: bool,
    #[arg(long, required_unless_present = "suite")]
    kind: Option<SynthKind>,
    #[arg(long, default_value_t = 5)]
    series: usize,
    #[arg(long, default_value_t = 120)]
    length: usize,
    #[arg(long, default_value = "monthly")]
    frequency: Frequency,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Validate { config } => {
            let summary = cmd_validate(&ExperimentConfig::load(&config)?)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&summary).map_err(|e| CliError::Runtime(e.to_string()))?
            );
        }
        Command::Run(args) => {
            let mut config = ExperimentConfig::load(&args.config)?;
            config.apply(&Overrides {
                schedule: args
                    .schedule
                    .as_deref()
                    .map(parse_schedule)
                    .transpose()
                    .map_err(CliError::Config)?,
                seed: args.seed,
                mape_denominator: args.mape_denominator,
                global_lstm: args.global_lstm,
                additive_growth: args.additive_growth,
                out: args.out,
            })?;
            let outcome = cmd_run(&config, args.method)?;
            println!("wrote {}", outcome.out_dir.display());
            if let Some(report) = outcome.report {
                match report.delta_percent {
                    Some(d) => println!(
                        "{}: EIMS MAPE {:.6}, EDMS MAPE {:.6}, delta {d:.2}%",
                        report.dataset, report.eims.dataset_average, report.edms.dataset_average
                    ),
                    None => println!("{}: delta undefined (zero EIMS MAPE)", report.dataset),
                }
            }
        }
        Command::Report { runs, out } => {
            let outcome = cmd_report(&runs, &out)?;
            println!(
                "merged {} runs into {} files under {}",
                outcome.reports.len(),
                outcome.written.len(),
                out.display()
            );
        }
        Command::Synth(args) => {
            if args.suite {
                for path in write_suite(&args.out, &bundled_suite(args.seed), args.seed)? {
                    println!("{}", path.display());
                }
            } else {
                let kind = args.kind.expect("clap enforces --kind without --suite");
                let spec = SynthSpec::new(kind, args.series, args.length, args.frequency, args.seed);
                cmd_synth(&spec, &args.out)?;
                println!("{}", args.out.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG as u8 } else { EXIT_OK as u8 });
        }
    };
    let result = configure_threads().and_then(|()| execute(cli.command));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
