use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::PathBuf;

use clap::Args;
use rcw_core::evaluation::{
    read_comparison_csv, run_comparison, select_knn_k, select_per_scenario, write_comparison_csv,
};
use rcw_core::topsis::{write_ranking_csv, Selection, ASSUMPTIONS};

use crate::config::{parse_scenario, parse_seeds, RunConfig};
use crate::error::{CliError, CliResult};
use crate::io::{create_output, load_dataset, write_err, write_sidecar};

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Labeled feature CSV or episode CSV.
    #[arg(long, required_unless_present = "from")]
    pub data: Option<PathBuf>,
    /// Rank an existing comparison CSV instead of running one.
    #[arg(long, conflicts_with = "data")]
    pub from: Option<PathBuf>,
    /// Comparison CSV to write.
    #[arg(long, short, required_unless_present = "from")]
    pub out: Option<PathBuf>,
    /// Comma-separated methods (overrides the config).
    #[arg(long)]
    pub method: Option<String>,
    /// Comma-separated training fractions, e.g. 65,70,80.
    #[arg(long)]
    pub scenario: Option<String>,
    /// Seeds as a list or range, e.g. 1-10. Without it, `--seed` runs one seed.
    #[arg(long)]
    pub seeds: Option<String>,
    /// Write one ranking CSV per scenario and assumption into this directory.
    #[arg(long)]
    pub ranking_dir: Option<PathBuf>,
    /// Also pick kNN's k from this list per scenario.
    #[arg(long)]
    pub knn_grid: Option<String>,
}

/// Weights as sixths, e.g. `2:3:1`.
fn weight_label(w: &[f64; 3]) -> String {
    w.iter()
        .map(|x| format!("{}", (x * 6.0).round() as u32))
        .collect::<Vec<_>>()
        .join(":")
}

fn print_grid(title: &str, scenarios: &[String], cell: impl Fn(&str, usize) -> String) {
    let width = scenarios
        .iter()
        .flat_map(|s| (0..4).map(|a| cell(s, a).len()).collect::<Vec<_>>())
        .chain(scenarios.iter().map(|s| s.len() + 1))
        .max()
        .unwrap_or(0)
        .max(4);
    println!("{title}");
    print!("{:<12}{:<10}", "assumption", "se:sp:t");
    for s in scenarios {
        print!("  {:>width$}", format!("{s}%"));
    }
    println!();
    for (a, w) in ASSUMPTIONS.iter().enumerate() {
        print!("{:<12}{:<10}", a + 1, weight_label(w));
        for s in scenarios {
            print!("  {:>width$}", cell(s, a));
        }
        println!();
    }
}

fn parse_list<T>(s: &str, f: impl Fn(&str) -> CliResult<T>) -> CliResult<Vec<T>> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(f)
        .collect()
}

pub fn run(args: &CompareArgs, cfg: &RunConfig, seed: Option<u64>, force: bool) -> CliResult<()> {
    let mut cfg = cfg.clone();
    if let Some(m) = &args.method {
        cfg.compare.methods = parse_list(m, |s| Ok(s.to_string()))?;
    }
    if let Some(s) = &args.scenario {
        cfg.compare.scenarios = parse_list(s, parse_scenario)?;
    }
    if let Some(s) = &args.seeds {
        cfg.compare.seeds = parse_seeds(s)?;
    } else if let Some(s) = seed {
        cfg.compare.seeds = vec![s];
    }
    cfg.validate()?;

    let reports = match &args.from {
        Some(path) => {
            let f = File::open(path).map_err(|e| CliError::io(path, e))?;
            read_comparison_csv(BufReader::new(f))
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?
        }
        None => {
            let data = args.data.as_ref().expect("clap requires --data");
            let ds = load_dataset(data, &cfg)?;
            let comparison = cfg.comparison()?;
            let cells =
                comparison.fractions.len() * comparison.seeds.len() * comparison.methods.len();
            eprintln!("running {cells} evaluations on {} instances", ds.len());
            let reports = run_comparison(&ds, &comparison)?;
            if let Some(grid) = &args.knn_grid {
                let ks = parse_list(grid, |s| {
                    s.parse()
                        .map_err(|_| CliError::Usage(format!("bad k '{s}'")))
                })?;
                let picks = select_knn_k(&ds, &ks, &comparison)?;
                let by: BTreeMap<_, _> = picks
                    .iter()
                    .map(|p| (p.scenario.clone(), p.best_k))
                    .collect();
                let scenarios: Vec<String> = by.keys().cloned().collect();
                print_grid("kNN k chosen by TOPSIS", &scenarios, |s, a| {
                    by[s][a].to_string()
                });
                println!();
            }
            reports
        }
    };
    if let Some(path) = &args.out {
        let mut out = create_output(path, force)?;
        write_comparison_csv(&reports, &mut out).map_err(write_err(path))?;
        out.flush().map_err(write_err(path))?;
        write_sidecar(path, "compare", &cfg)?;
        eprintln!("wrote {} rows to {}", reports.len(), path.display());
    }

    let picks: BTreeMap<String, [Selection; 4]> = select_per_scenario(&reports)?;
    let scenarios: Vec<String> = picks.keys().cloned().collect();
    print_grid(
        "Best method by TOPSIS (rows: assumption, columns: training share)",
        &scenarios,
        |s, a| picks[s][a].best.clone(),
    );
    let notices: BTreeSet<&String> = picks
        .values()
        .flat_map(|sel| sel.iter().flat_map(|x| &x.notices))
        .collect();
    for n in notices {
        eprintln!("note: {n}");
    }

    if let Some(dir) = &args.ranking_dir {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        for (scenario, sels) in &picks {
            for (a, sel) in sels.iter().enumerate() {
                let path = dir.join(format!("ranking_{scenario}_a{}.csv", a + 1));
                let mut out = create_output(&path, force)?;
                write_ranking_csv(&sel.ranking, &mut out).map_err(write_err(&path))?;
            }
        }
    }
    Ok(())
}
