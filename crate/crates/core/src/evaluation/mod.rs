//! Confusion metrics, timed evaluation, threshold sweeps and data-driven
//! threshold extraction.

mod comparison;

pub use comparison::{
    average_over_seeds, read_comparison_csv, run_comparison, scenario_id, select_knn_k,
    select_per_scenario, write_comparison_csv, ComparisonConfig, KSelection, Method, MethodKind,
    COMPARISON_HEADER,
};

use std::time::Instant;

use crate::baselines::{perceptual_warn, IndicatorKind, PerceptualParams};
use crate::classifiers::{
    apply_cost_reweighting, train_c45, C45Params, Classifier, ClassifierSpec, CostMatrix,
};
use crate::error::{Error, Result};
use crate::features::FeatureEncoding;
use crate::trajdata::{ClassLabel, Dataset};

/// Counts with Warning as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fn_: u64,
    pub fp: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fn_ + self.fp + self.tn
    }

    pub fn positives(&self) -> u64 {
        self.tp + self.fn_
    }

    pub fn negatives(&self) -> u64 {
        self.tn + self.fp
    }

    pub fn record(&mut self, truth: ClassLabel, predicted: ClassLabel) {
        match (truth, predicted) {
            (ClassLabel::Warning, ClassLabel::Warning) => self.tp += 1,
            (ClassLabel::Warning, ClassLabel::Safe) => self.fn_ += 1,
            (ClassLabel::Safe, ClassLabel::Warning) => self.fp += 1,
            (ClassLabel::Safe, ClassLabel::Safe) => self.tn += 1,
        }
    }
}

pub fn confusion(predictions: &[ClassLabel], labels: &[ClassLabel]) -> Result<ConfusionMatrix> {
    if predictions.len() != labels.len() {
        return Err(Error::InvalidInput(format!(
            "{} predictions for {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    if labels.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut cm = ConfusionMatrix::default();
    for (&p, &t) in predictions.iter().zip(labels) {
        cm.record(t, p);
    }
    Ok(cm)
}

/// Ratios whose denominator is zero are absent rather than 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub accuracy: Option<f64>,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn metrics(cm: &ConfusionMatrix) -> Metrics {
    Metrics {
        accuracy: ratio(cm.tp + cm.tn, cm.total()),
        sensitivity: ratio(cm.tp, cm.positives()),
        specificity: ratio(cm.tn, cm.negatives()),
    }
}

/// How processing time is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Timing {
    /// No clock reads; every time is reported as 0 so outputs are
    /// reproducible byte for byte.
    Off,
    /// Median over this many timed runs.
    Repeats(usize),
}

impl Default for Timing {
    fn default() -> Self {
        Timing::Repeats(1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub method: String,
    pub scenario: String,
    pub seed: u64,
    pub confusion: ConfusionMatrix,
    pub accuracy: Option<f64>,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    /// Median wall-clock seconds.
    pub time_s: f64,
    /// Every timed run, seconds.
    pub time_runs: Vec<f64>,
}

impl EvaluationReport {
    pub fn new(
        method: &str,
        scenario: &str,
        seed: u64,
        cm: ConfusionMatrix,
        time_runs: Vec<f64>,
    ) -> Self {
        let m = metrics(&cm);
        EvaluationReport {
            method: method.into(),
            scenario: scenario.into(),
            seed,
            confusion: cm,
            accuracy: m.accuracy,
            sensitivity: m.sensitivity,
            specificity: m.specificity,
            time_s: median(&time_runs),
            time_runs,
        }
    }

    /// Largest minus smallest timed run.
    pub fn time_spread(&self) -> f64 {
        let max = self
            .time_runs
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let min = self.time_runs.iter().copied().fold(f64::INFINITY, f64::min);
        if self.time_runs.is_empty() {
            0.0
        } else {
            max - min
        }
    }
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Runs `job` once per timed repeat (once when timing is off) and returns
/// its last result with the run times.
pub(crate) fn timed<T>(
    timing: Timing,
    mut job: impl FnMut() -> Result<T>,
) -> Result<(T, Vec<f64>)> {
    match timing {
        Timing::Off => Ok((job()?, vec![0.0])),
        Timing::Repeats(n) => {
            let mut runs = Vec::with_capacity(n.max(1));
            let mut last = None;
            for _ in 0..n.max(1) {
                let start = Instant::now();
                let out = job()?;
                runs.push(start.elapsed().as_secs_f64());
                last = Some(out);
            }
            Ok((last.expect("at least one run"), runs))
        }
    }
}

fn labels(ds: &Dataset) -> Vec<ClassLabel> {
    ds.instances.iter().map(|i| i.label).collect()
}

/// Reweights `train` by `cost`, trains, and classifies `validation`.
/// Processing time covers training and validation prediction.
pub fn evaluate_classifier(
    spec: &ClassifierSpec,
    train: &Dataset,
    validation: &Dataset,
    cost: &CostMatrix,
    seed: u64,
    scenario: &str,
    timing: Timing,
) -> Result<EvaluationReport> {
    let weighted = apply_cost_reweighting(&train.instances, cost);
    let (preds, runs) = timed(timing, || {
        let model = spec.train(&weighted, seed)?;
        Ok(validation
            .instances
            .iter()
            .map(|i| model.predict(&i.features).label)
            .collect::<Vec<_>>())
    })?;
    let cm = confusion(&preds, &labels(validation))?;
    Ok(EvaluationReport::new(&spec.id(), scenario, seed, cm, runs))
}

/// Evaluates an untrained rule; time is prediction only.
pub fn evaluate_rule(
    name: &str,
    rule: &dyn Classifier,
    validation: &Dataset,
    seed: u64,
    scenario: &str,
    timing: Timing,
) -> Result<EvaluationReport> {
    let (preds, runs) = timed(timing, || {
        Ok(validation
            .instances
            .iter()
            .map(|i| rule.predict(&i.features).label)
            .collect::<Vec<_>>())
    })?;
    let cm = confusion(&preds, &labels(validation))?;
    Ok(EvaluationReport::new(name, scenario, seed, cm, runs))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub threshold: f64,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
}

/// Perceptual warning at each threshold.
pub fn sweep_threshold(
    indicator: IndicatorKind,
    data: &Dataset,
    thresholds: &[f64],
    encoding: &FeatureEncoding,
) -> Result<Vec<SweepPoint>> {
    if thresholds.is_empty() {
        return Err(Error::InvalidInput("empty threshold list".into()));
    }
    if thresholds
        .windows(2)
        .any(|w| w[0].partial_cmp(&w[1]).is_none_or(|o| o.is_gt()))
    {
        return Err(Error::InvalidInput(
            "thresholds must be sorted ascending".into(),
        ));
    }
    let decoded: Vec<_> = data
        .instances
        .iter()
        .map(|i| (encoding.decode(&i.features), i.label))
        .collect();
    Ok(thresholds
        .iter()
        .map(|&threshold| {
            let p = PerceptualParams {
                indicator,
                threshold,
            };
            let mut cm = ConfusionMatrix::default();
            for (fv, label) in &decoded {
                cm.record(*label, perceptual_warn(fv, &p));
            }
            let m = metrics(&cm);
            SweepPoint {
                threshold,
                sensitivity: m.sensitivity,
                specificity: m.specificity,
            }
        })
        .collect())
}

/// Root threshold of a cost-weighted C4.5 tree grown on one indicator.
///
/// Uncapped, the tree is pruned and its root split reported. With
/// `max_depth = Some(1)` the single split minimizing weighted training
/// cost is returned; pruning is skipped there since it can only remove
/// the split being asked for.
pub fn extract_critical_threshold(
    indicator: IndicatorKind,
    data: &Dataset,
    cm: &CostMatrix,
    max_depth: Option<usize>,
) -> Result<f64> {
    let (w, s) = data.class_counts();
    if w == 0 {
        return Err(Error::MissingClass("Warning"));
    }
    if s == 0 {
        return Err(Error::MissingClass("Safe"));
    }
    let params = C45Params {
        prune: max_depth.is_none(),
        max_depth,
        features: vec![indicator.feature_index()],
        ..Default::default()
    };
    let tree = train_c45(&apply_cost_reweighting(&data.instances, cm), &params)?;
    tree.root().split.map(|s| s.threshold).ok_or(Error::NoSplit)
}
