use std::path::PathBuf;

use clap::Args;
use rcw_core::evaluation::{
    evaluate_rule, run_comparison, scenario_id, write_comparison_csv, ComparisonConfig,
    EvaluationReport,
};
use rcw_core::trajdata::split_dataset;

use crate::config::{parse_scenario, RunConfig};
use crate::error::{CliError, CliResult};
use crate::io::{load_dataset, load_model, model_encoding};

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Labeled feature CSV or episode CSV.
    #[arg(long)]
    pub data: PathBuf,
    /// Saved model to score.
    #[arg(long, conflicts_with = "method")]
    pub model: Option<PathBuf>,
    /// Learner or baseline to train and score on a holdout split.
    #[arg(long)]
    pub method: Option<String>,
    /// Training fraction, e.g. 80 or 0.8. A saved model is scored on the
    /// whole file unless this is given.
    #[arg(long)]
    pub scenario: Option<String>,
}

fn print(report: &EvaluationReport) -> CliResult<()> {
    let stdout = std::io::stdout();
    write_comparison_csv(std::slice::from_ref(report), stdout.lock())
        .map_err(|e| CliError::Internal(format!("stdout: {e}")))?;
    let c = &report.confusion;
    eprintln!(
        "confusion: tp={} fn={} fp={} tn={}",
        c.tp, c.fn_, c.fp, c.tn
    );
    Ok(())
}

pub fn run(args: &EvalArgs, cfg: &RunConfig) -> CliResult<()> {
    let ds = load_dataset(&args.data, cfg)?;
    let fraction = args.scenario.as_deref().map(parse_scenario).transpose()?;
    if let Some(path) = &args.model {
        let file = load_model(path)?;
        let encoding = model_encoding(&file)?;
        if encoding != cfg.encoding()? {
            eprintln!("note: model was trained with NoThreat cap {}", encoding.cap);
        }
        let (scenario, val) = match fraction {
            Some(f) => (scenario_id(f), split_dataset(&ds, f, cfg.seed)?.1),
            None => ("all".to_string(), ds),
        };
        let name = file
            .meta
            .get("method")
            .cloned()
            .unwrap_or_else(|| file.model.kind().to_string());
        let report = evaluate_rule(&name, &file.model, &val, cfg.seed, &scenario, cfg.timing())?;
        return print(&report);
    }
    let Some(method) = &args.method else {
        return Err(CliError::Usage("eval needs --model or --method".into()));
    };
    let comparison = ComparisonConfig {
        fractions: vec![fraction.unwrap_or(0.8)],
        methods: vec![cfg.method(method)?],
        seeds: vec![cfg.seed],
        ..cfg.comparison()?
    };
    let reports = run_comparison(&ds, &comparison)?;
    print(&reports[0])
}
