//! The `rcw` command line: data generation, training, evaluation, model
//! comparison, rule listing and a streaming warning engine.

pub mod cmd;
pub mod config;
pub mod error;
mod io;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::{RunConfig, Units};
pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "rcw", version, about = "Rear-end collision warning toolkit")]
pub struct Cli {
    /// Configuration file (TOML).
    #[arg(long, global = true, env = config::CONFIG_ENV)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Speed units of episode CSV and stream input.
    #[arg(long, global = true, value_enum)]
    pub units: Option<Units>,
    /// Misclassification costs as FN:FP, e.g. 5:1.
    #[arg(long, global = true)]
    pub cost: Option<String>,
    /// Overwrite existing output files.
    #[arg(long, global = true)]
    pub force: bool,
    /// `off` for reproducible zero times, or a repeat count.
    #[arg(long, global = true)]
    pub timing: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic car-following episodes.
    Gen(cmd::gen::GenArgs),
    /// Train a classifier and write the model file.
    Train(cmd::train::TrainArgs),
    /// Evaluate a saved model or a method on a holdout split.
    Eval(cmd::eval::EvalArgs),
    /// Compare learners and baselines, then rank them with TOPSIS.
    Compare(cmd::compare::CompareArgs),
    /// List the rules of a tree or forest model.
    Rules(cmd::rules::RulesArgs),
    /// Classify `t,v_f,v_l,range` lines from standard input.
    Stream(cmd::stream::StreamArgs),
}

impl Cli {
    /// Loads the configuration and applies the global overrides.
    pub fn resolve_config(&self) -> CliResult<RunConfig> {
        let mut cfg = RunConfig::load(self.config.as_deref())?;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(u) = self.units {
            cfg.units = u;
        }
        if let Some(c) = &self.cost {
            cfg.cost = c.clone();
        }
        if let Some(t) = &self.timing {
            cfg.compare.timing_repeats = match t.as_str() {
                "off" => 0,
                n => n.parse().map_err(|_| {
                    CliError::Usage(format!("--timing takes 'off' or a count, got '{t}'"))
                })?,
            };
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn dispatch(cli: &Cli) -> CliResult<()> {
    let cfg = cli.resolve_config()?;
    match &cli.command {
        Command::Gen(a) => cmd::gen::run(a, &cfg, cli.force),
        Command::Train(a) => cmd::train::run(a, &cfg, cli.force),
        Command::Eval(a) => cmd::eval::run(a, &cfg),
        Command::Compare(a) => cmd::compare::run(a, &cfg, cli.seed, cli.force),
        Command::Rules(a) => cmd::rules::run(a),
        Command::Stream(a) => cmd::stream::run(a, &cfg),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let outcome = std::panic::catch_unwind(|| dispatch(&cli))
        .unwrap_or_else(|_| Err(CliError::Internal("unexpected failure".into())));
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("rcw: {e}");
            e.exit_code()
        }
    }
}
