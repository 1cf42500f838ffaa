use std::collections::BTreeMap;
use std::io::{Read, Write};

use super::{evaluate_classifier, evaluate_rule, ConfusionMatrix, EvaluationReport, Timing};
use crate::baselines::{Baseline, BaselineClassifier};
use crate::classifiers::{ClassifierSpec, CostMatrix};
use crate::error::{Error, Result};
use crate::features::FeatureEncoding;
use crate::topsis::{select_best, Selection};
use crate::trajdata::{split_dataset, Dataset};

pub const COMPARISON_HEADER: &str = "method,scenario,seed,accuracy,sensitivity,specificity,time_s";

#[derive(Debug, Clone, PartialEq)]
pub enum MethodKind {
    Learner(ClassifierSpec),
    Baseline(Baseline),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Method {
    pub id: String,
    pub kind: MethodKind,
}

impl Method {
    pub fn learner(spec: ClassifierSpec) -> Self {
        Method {
            id: spec.id(),
            kind: MethodKind::Learner(spec),
        }
    }

    pub fn baseline(name: &str, b: Baseline) -> Self {
        Method {
            id: name.into(),
            kind: MethodKind::Baseline(b),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonConfig {
    /// Training fractions, one scenario each.
    pub fractions: Vec<f64>,
    pub methods: Vec<Method>,
    pub seeds: Vec<u64>,
    pub cost: CostMatrix,
    pub timing: Timing,
    pub encoding: FeatureEncoding,
}

/// Scenario label for a training fraction, e.g. `0.8` → `"80"`.
pub fn scenario_id(fraction: f64) -> String {
    format!("{}", (fraction * 100.0).round() as u64)
}

/// Every (scenario, seed, method) cell, in that nesting order. Each seed
/// fixes both the holdout split and the learner's random stream.
pub fn run_comparison(ds: &Dataset, cfg: &ComparisonConfig) -> Result<Vec<EvaluationReport>> {
    if cfg.fractions.is_empty() || cfg.methods.is_empty() || cfg.seeds.is_empty() {
        return Err(Error::InvalidConfig(
            "comparison needs scenarios, methods and seeds".into(),
        ));
    }
    let mut out = Vec::new();
    for &f in &cfg.fractions {
        let scenario = scenario_id(f);
        for &seed in &cfg.seeds {
            let (train, val) = split_dataset(ds, f, seed)?;
            for m in &cfg.methods {
                let report = match &m.kind {
                    MethodKind::Learner(spec) => {
                        let mut r = evaluate_classifier(
                            spec, &train, &val, &cfg.cost, seed, &scenario, cfg.timing,
                        )?;
                        r.method = m.id.clone();
                        r
                    }
                    MethodKind::Baseline(b) => {
                        let rule = BaselineClassifier {
                            baseline: *b,
                            encoding: cfg.encoding,
                        };
                        evaluate_rule(&m.id, &rule, &val, seed, &scenario, cfg.timing)?
                    }
                };
                out.push(report);
            }
        }
    }
    Ok(out)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_comparison_csv<W: Write>(
    reports: &[EvaluationReport],
    mut out: W,
) -> std::io::Result<()> {
    writeln!(out, "{COMPARISON_HEADER}")?;
    for r in reports {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.method,
            r.scenario,
            r.seed,
            opt(r.accuracy),
            opt(r.sensitivity),
            opt(r.specificity),
            r.time_s
        )?;
    }
    out.flush()
}

/// Reads the comparison CSV back. Confusion counts are not stored, so the
/// returned reports carry an empty confusion matrix.
pub fn read_comparison_csv<R: Read>(input: R) -> Result<Vec<EvaluationReport>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let header = rdr.headers().map_err(|e| Error::MalformedRow {
        line: 1,
        message: e.to_string(),
    })?;
    if header.iter().collect::<Vec<_>>().join(",") != COMPARISON_HEADER {
        return Err(Error::MalformedRow {
            line: 1,
            message: format!("expected header '{COMPARISON_HEADER}'"),
        });
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::MalformedRow {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |what: &str| Error::MalformedRow {
            line,
            message: format!("bad {what}"),
        };
        let num = |i: usize, what: &str| -> Result<Option<f64>> {
            match &rec[i] {
                "" => Ok(None),
                s => s.parse::<f64>().map(Some).map_err(|_| bad(what)),
            }
        };
        out.push(EvaluationReport {
            method: rec[0].to_string(),
            scenario: rec[1].to_string(),
            seed: rec[2].parse().map_err(|_| bad("seed"))?,
            confusion: ConfusionMatrix::default(),
            accuracy: num(3, "accuracy")?,
            sensitivity: num(4, "sensitivity")?,
            specificity: num(5, "specificity")?,
            time_s: num(6, "time_s")?.ok_or_else(|| bad("time_s"))?,
            time_runs: Vec::new(),
        });
    }
    Ok(out)
}

fn mean(xs: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Option<Vec<f64>> = xs.collect();
    v.filter(|v| !v.is_empty())
        .map(|v| v.iter().sum::<f64>() / v.len() as f64)
}

/// Averages reports over seeds, per (scenario, method), keeping the first
/// appearance order of methods.
pub fn average_over_seeds(reports: &[EvaluationReport]) -> BTreeMap<String, Vec<EvaluationReport>> {
    let mut by_scenario: BTreeMap<String, Vec<(String, Vec<&EvaluationReport>)>> = BTreeMap::new();
    for r in reports {
        let cells = by_scenario.entry(r.scenario.clone()).or_default();
        match cells.iter_mut().find(|(m, _)| *m == r.method) {
            Some((_, v)) => v.push(r),
            None => cells.push((r.method.clone(), vec![r])),
        }
    }
    by_scenario
        .into_iter()
        .map(|(scenario, cells)| {
            let avg = cells
                .into_iter()
                .map(|(method, rs)| EvaluationReport {
                    method,
                    scenario: scenario.clone(),
                    seed: rs[0].seed,
                    confusion: ConfusionMatrix::default(),
                    accuracy: mean(rs.iter().map(|r| r.accuracy)),
                    sensitivity: mean(rs.iter().map(|r| r.sensitivity)),
                    specificity: mean(rs.iter().map(|r| r.specificity)),
                    time_s: rs.iter().map(|r| r.time_s).sum::<f64>() / rs.len() as f64,
                    time_runs: Vec::new(),
                })
                .collect();
            (scenario, avg)
        })
        .collect()
}

/// Best method per scenario (keys) for each of the four assumptions.
pub fn select_per_scenario(
    reports: &[EvaluationReport],
) -> Result<BTreeMap<String, [Selection; 4]>> {
    average_over_seeds(reports)
        .into_iter()
        .map(|(scenario, avg)| {
            let pick = |a| select_best(&avg, a);
            Ok((scenario, [pick(1)?, pick(2)?, pick(3)?, pick(4)?]))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct KSelection {
    pub scenario: String,
    /// Averaged kNN reports, one per k.
    pub reports: Vec<EvaluationReport>,
    /// Chosen k under each assumption.
    pub best_k: [usize; 4],
}

/// Evaluates kNN for each k and picks k per scenario with TOPSIS.
pub fn select_knn_k(ds: &Dataset, ks: &[usize], cfg: &ComparisonConfig) -> Result<Vec<KSelection>> {
    let methods = ks
        .iter()
        .map(|&k| Method::learner(ClassifierSpec::Knn { k }))
        .collect();
    let reports = run_comparison(
        ds,
        &ComparisonConfig {
            methods,
            ..cfg.clone()
        },
    )?;
    average_over_seeds(&reports)
        .into_iter()
        .map(|(scenario, avg)| {
            let mut best_k = [0; 4];
            for (a, slot) in best_k.iter_mut().enumerate() {
                let sel = select_best(&avg, a + 1)?;
                *slot = sel
                    .best
                    .trim_start_matches("knn")
                    .parse()
                    .expect("kNN ids carry k");
            }
            Ok(KSelection {
                scenario,
                reports: avg,
                best_k,
            })
        })
        .collect()
}
