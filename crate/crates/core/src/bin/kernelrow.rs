use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kernelrow::batch::{self, EvalArgs, Status};
use kernelrow::config::{Overrides, RunConfig};
use kernelrow::synth::{random_suite, SuiteParams};

#[derive(Parser)]
#[command(version, about = "Count kernels per row on maize ears")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads; overrides the config file.
    #[arg(long, short = 'j', global = true)]
    parallelism: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cut ears out of scene images.
    Extract {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Count kernels per row for every mask contract in a directory.
    Count {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Write synthetic mask contracts and their truth table.
    Synth {
        /// JSON-lines spec file; without it a random suite is drawn.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 200)]
        count: usize,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        /// Jitter as a fraction of the row spacing across the ear.
        #[arg(long, default_value_t = 0.0)]
        jitter_fraction: f64,
        #[arg(long, default_value_t = 0)]
        immature_max: u32,
    },
    /// Score a results table.
    Eval {
        #[arg(long)]
        results: PathBuf,
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long)]
        annotations: Option<PathBuf>,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        bin_width: f64,
    },
    /// Time the counting stages on synthetic ears.
    Bench {
        #[arg(long, default_value_t = 20)]
        ears: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> kernelrow::Result<Status> {
    let overrides = |input: &Option<PathBuf>, output: &Option<PathBuf>| Overrides {
        input: input.clone(),
        output: output.clone(),
        parallelism: cli.parallelism,
    };
    let none = Overrides {
        parallelism: cli.parallelism,
        ..Default::default()
    };
    match &cli.command {
        Command::Extract { input, output } => {
            let cfg = RunConfig::resolve(cli.config.as_deref(), &overrides(input, output))?;
            let report = batch::cmd_extract(&cfg)?;
            println!("{} ears extracted, {} images failed", report.ears.len(), report.failures.len());
            Ok(report.status())
        }
        Command::Count { input, output } => {
            let cfg = RunConfig::resolve(cli.config.as_deref(), &overrides(input, output))?;
            let report = batch::cmd_count(&cfg)?;
            let failed = report.rows.iter().filter(|r| r.is_error()).count();
            println!(
                "{} ears counted, {failed} failed; {:.4} s/ear filtering, {:.4} s/ear row counting",
                report.rows.len() - failed,
                report.timing.ingest_filter,
                report.timing.row_counting
            );
            Ok(report.status())
        }
        Command::Synth {
            spec,
            output,
            count,
            seed,
            jitter_fraction,
            immature_max,
        } => {
            let cfg = RunConfig::resolve(cli.config.as_deref(), &none)?;
            let specs = match spec {
                Some(path) => batch::read_spec_file(path)?,
                None => random_suite(&SuiteParams {
                    count: *count,
                    seed: *seed,
                    jitter_fraction: *jitter_fraction,
                    immature_tip: (0, *immature_max),
                    ..Default::default()
                }),
            };
            let report = batch::cmd_synth(&specs, output, cfg.parallelism)?;
            println!("{} contracts written to {}", report.truth.len(), output.display());
            Ok(report.status())
        }
        Command::Eval {
            results,
            truth,
            annotations,
            output,
            bin_width,
        } => {
            let report = batch::cmd_eval(&EvalArgs {
                results: results.clone(),
                truth: truth.clone(),
                annotations: annotations.clone(),
                output: output.clone(),
                bin_width: *bin_width,
            })?;
            if !report.truth_pairs.is_empty() {
                let s = kernelrow::eval::summarize(&report.truth_pairs)?;
                println!(
                    "{} ears: accuracy ratio {:.3}%, within one kernel {:.1}%",
                    s.count,
                    s.accuracy_ratio,
                    100.0 * s.within_one
                );
            }
            Ok(Status::Success)
        }
        Command::Bench { ears, seed, output } => {
            let cfg = RunConfig::resolve(cli.config.as_deref(), &none)?;
            let specs = random_suite(&SuiteParams {
                count: *ears,
                seed: *seed,
                ..Default::default()
            });
            let report = batch::cmd_bench(&specs, &cfg, output.as_deref())?;
            println!(
                "{} ears: {:.4} s/ear filtering, {:.4} s/ear row counting (max {:.4} s)",
                report.timing.ears, report.timing.ingest_filter, report.timing.row_counting, report.max_row_counting
            );
            Ok(Status::Success)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(status) => ExitCode::from(status.code() as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
