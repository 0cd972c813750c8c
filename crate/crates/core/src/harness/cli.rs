//! `mvanc` command-line interface.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 divergence,
//! 3 I/O or file-format error.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use super::config::ExperimentConfig;
use super::pipeline::{files, run_pipeline_with, Experiment, RunOptions};
use super::report::{SimulationReport, StageTraces};
use crate::error::{Error, Result, Stage};
use crate::paths::{save_paths, synth_paths};

#[derive(Debug, Parser)]
#[command(name = "mvanc", version, about = "Multichannel virtual-sensing ANC simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Experiment config file (TOML).
    #[arg(long, value_name = "FILE")]
    config: PathBuf,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the number of samples per stage.
    #[arg(long)]
    samples: Option<usize>,
    /// Override the output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Only report errors.
    #[arg(long)]
    quiet: bool,
    /// Also write the precomputed signals as CSV.
    #[arg(long)]
    dump_signals: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Synthesize a plant and write it as a MVANC-PATHS v1 file.
    SynthPaths {
        /// Take geometry, lengths and seed from this config.
        #[arg(long, value_name = "FILE")]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Destination path file.
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
        #[arg(long)]
        primary_len: Option<usize>,
        #[arg(long)]
        secondary_len: Option<usize>,
        #[arg(long)]
        quiet: bool,
    },
    /// Run the full three-stage experiment.
    Run(RunArgs),
    /// Tuning stage only; writes the plant, tuning filters and trace.
    Tune(RunArgs),
    /// Auxiliary stage from saved tuning filters.
    Aux(RunArgs),
    /// Control stage from saved auxiliary filters; also writes the report.
    Control(RunArgs),
    /// Recompute the report from saved traces and filters.
    Report(RunArgs),
}

impl RunArgs {
    fn experiment_config(&self) -> Result<ExperimentConfig> {
        let mut config = ExperimentConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(samples) = self.samples {
            config.num_samples = samples;
        }
        if let Some(out) = &self.out {
            config.output.dir = Some(out.clone());
        }
        config.validate()?;
        Ok(config)
    }

    fn options(&self) -> RunOptions {
        RunOptions {
            dump_signals: self.dump_signals,
        }
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::SynthPaths {
            config,
            seed,
            out,
            primary_len,
            secondary_len,
            quiet,
        } => {
            let config = match config {
                Some(path) => ExperimentConfig::load(&path)?,
                None => ExperimentConfig::default(),
            };
            let defaults = ExperimentConfig::default().paths;
            let lp = primary_len.or(config.paths.primary_len).or(defaults.primary_len);
            let ls = secondary_len.or(config.paths.secondary_len).or(defaults.secondary_len);
            let seed = seed.unwrap_or_else(|| config.path_seed());
            let paths = synth_paths(&config.geometry, lp.unwrap_or(1), ls.unwrap_or(1), seed)?;
            save_paths(&paths, &out)?;
            if !quiet {
                println!("wrote {}", out.display());
            }
            Ok(())
        }
        Command::Run(args) => {
            let config = args.experiment_config()?;
            let quiet = args.quiet;
            let report = run_pipeline_with(&config, args.options(), |t| {
                if !quiet {
                    eprintln!("{:<10} done in {:.2} s", t.stage.as_str(), t.seconds);
                }
            })?;
            if !quiet {
                print_summary(&report, &config);
            }
            Ok(())
        }
        Command::Tune(args) => staged(&args, Stage::Tuning, |config| {
            let experiment = Experiment::prepare(config, args.options())?;
            let pre = experiment.tuning_signals()?;
            experiment.tune(&pre)?;
            Ok(None)
        }),
        Command::Aux(args) => staged(&args, Stage::Auxiliary, |config| {
            let experiment = Experiment::resume(config, args.options())?;
            let w = experiment.load_control_filters(files::TUNING_FILTERS)?;
            let pre = experiment.tuning_signals()?;
            experiment.train_auxiliary(&pre, &w)?;
            Ok(None)
        }),
        Command::Control(args) => staged(&args, Stage::Control, |config| {
            let experiment = Experiment::resume(config, args.options())?;
            let h = experiment.load_auxiliary_filters()?;
            let w = experiment.load_control_filters(files::TUNING_FILTERS)?;
            let pre = experiment.control_signals()?;
            let (wc, control_physical, control_virtual) = experiment.control(&pre, &h)?;
            drop(pre);
            let saved = experiment.load_traces_before_control()?;
            let traces = StageTraces {
                control_physical,
                control_virtual,
                ..saved
            };
            Ok(Some(experiment.finish(&traces, &w, &wc)?))
        }),
        Command::Report(args) => staged(&args, Stage::Report, |config| {
            let experiment = Experiment::resume(config, args.options())?;
            let w = experiment.load_control_filters(files::TUNING_FILTERS)?;
            let wc = experiment.load_control_filters(files::CONTROL_FILTERS)?;
            let traces = experiment.load_traces()?;
            Ok(Some(experiment.finish(&traces, &w, &wc)?))
        }),
    }
}

/// Runs one stage, tagging failures and leaving a `FAILED` marker.
fn staged(
    args: &RunArgs,
    stage: Stage,
    body: impl FnOnce(&ExperimentConfig) -> Result<Option<SimulationReport>>,
) -> Result<()> {
    let config = args.experiment_config()?;
    let start = std::time::Instant::now();
    match body(&config) {
        Ok(report) => {
            if !args.quiet {
                eprintln!("{:<10} done in {:.2} s", stage.as_str(), start.elapsed().as_secs_f64());
                if let Some(report) = report {
                    print_summary(&report, &config);
                }
            }
            Ok(())
        }
        Err(e) => {
            let e = match e {
                Error::Config(_) => e,
                other => other.in_stage(stage),
            };
            Experiment::mark_failed(&config.out_dir(), &e);
            Err(e)
        }
    }
}

fn print_summary(report: &SimulationReport, config: &ExperimentConfig) {
    println!("results in {}", config.out_dir().display());
    for (i, r) in report.virtual_reduction_db.iter().enumerate() {
        println!("virtual mic {}: control-stage reduction {r:.2} dB", i + 1);
    }
    for f in &report.auxiliary_fidelity {
        println!("{}: auxiliary prediction {:.2} dB below residual", f.mic, f.margin_db);
    }
    let p = &report.passband;
    println!(
        "filter {}: passband margin {:.2} dB (tuning), {:.2} dB (control)",
        p.filter, p.tuning.margin_db, p.control.margin_db
    );
}
