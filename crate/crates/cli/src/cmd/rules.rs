use std::path::PathBuf;

use clap::Args;
use rcw_core::classifiers::{extract_rules, Model, Rule};

use crate::error::{CliError, CliResult};
use crate::io::load_model;

#[derive(Debug, Args)]
pub struct RulesArgs {
    /// Tree or forest model file.
    #[arg(long)]
    pub model: PathBuf,
    /// Number of rules to show, by descending support.
    #[arg(long, default_value_t = 10)]
    pub top: usize,
}

/// Rules sorted by support, heaviest first; ties keep tree order.
pub fn ranked_rules(model: &Model) -> CliResult<Vec<Rule>> {
    let mut rules = match model {
        Model::Tree(t) => extract_rules(t),
        Model::Forest(f) => f.trees.iter().flat_map(extract_rules).collect(),
        other => {
            return Err(CliError::Data(format!(
                "a {} model has no rules",
                other.kind()
            )))
        }
    };
    rules.sort_by(|a, b| b.support_weight.total_cmp(&a.support_weight));
    Ok(rules)
}

pub fn run(args: &RulesArgs) -> CliResult<()> {
    let file = load_model(&args.model)?;
    let rules = ranked_rules(&file.model)?;
    let shown = args.top.min(rules.len());
    println!(
        "# {shown} of {} rules from a {} model, by support",
        rules.len(),
        file.model.kind()
    );
    for r in &rules[..shown] {
        println!("{r}");
    }
    Ok(())
}
