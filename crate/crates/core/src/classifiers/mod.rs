//! Supervised learners: cost-sensitive random forest, C4.5, kNN and
//! Gaussian naive Bayes, plus rule extraction and model files.

mod bayes;
mod forest;
mod knn;
mod model_io;
mod rules;
mod tree;

pub use bayes::{train_naive_bayes, ClassGaussian, NaiveBayesModel};
pub use forest::{train_random_forest, ForestModel, ForestParams};
pub use knn::{train_knn, KnnModel};
pub use model_io::{read_model, write_model, ModelFile, FORMAT_ID, FORMAT_VERSION};
pub use rules::{extract_rules, Interval, Rule};
pub use tree::{pessimistic_extra_errors, prune, train_c45, C45Params, Node, Split, TreeModel};

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::features::N_FEATURES;
use crate::trajdata::ClassLabel;

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledInstance {
    pub features: [f64; N_FEATURES],
    pub label: ClassLabel,
    pub weight: f64,
}

impl LabeledInstance {
    pub fn new(features: [f64; N_FEATURES], label: ClassLabel) -> Self {
        LabeledInstance {
            features,
            label,
            weight: 1.0,
        }
    }

    pub fn weighted(features: [f64; N_FEATURES], label: ClassLabel, weight: f64) -> Self {
        LabeledInstance {
            features,
            label,
            weight,
        }
    }
}

/// Misclassification costs; correct predictions cost nothing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostMatrix {
    /// Cost of predicting Safe for a true Warning.
    pub cost_fn: f64,
    /// Cost of predicting Warning for a true Safe.
    pub cost_fp: f64,
}

impl CostMatrix {
    pub const IDENTITY: CostMatrix = CostMatrix {
        cost_fn: 1.0,
        cost_fp: 1.0,
    };
    /// Missed warnings cost five false alarms.
    pub const WARNING_FIVE_TO_ONE: CostMatrix = CostMatrix {
        cost_fn: 5.0,
        cost_fp: 1.0,
    };

    pub fn new(cost_fn: f64, cost_fp: f64) -> Result<Self> {
        let ok = |c: f64| c >= 0.0 && c.is_finite();
        if !ok(cost_fn) || !ok(cost_fp) || (cost_fn == 0.0 && cost_fp == 0.0) {
            return Err(Error::InvalidConfig(format!(
                "invalid cost matrix {cost_fn}:{cost_fp}"
            )));
        }
        Ok(CostMatrix { cost_fn, cost_fp })
    }

    pub fn weight_for(&self, label: ClassLabel) -> f64 {
        match label {
            ClassLabel::Warning => self.cost_fn,
            ClassLabel::Safe => self.cost_fp,
        }
    }
}

impl Default for CostMatrix {
    fn default() -> Self {
        CostMatrix::IDENTITY
    }
}

/// Parses `FN:FP`, e.g. `5:1`.
impl FromStr for CostMatrix {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidConfig(format!("cost '{s}' is not FN:FP")))?;
        let parse = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidConfig(format!("cost '{s}' is not FN:FP")))
        };
        CostMatrix::new(parse(a)?, parse(b)?)
    }
}

impl fmt::Display for CostMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.cost_fn, self.cost_fp)
    }
}

/// Scales each instance weight by the cost of misclassifying its class.
pub fn apply_cost_reweighting(
    instances: &[LabeledInstance],
    cm: &CostMatrix,
) -> Vec<LabeledInstance> {
    instances
        .iter()
        .map(|i| LabeledInstance {
            weight: i.weight * cm.weight_for(i.label),
            ..i.clone()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub label: ClassLabel,
    /// Leaf probability, vote fraction, neighbour weight share or posterior
    /// of the Warning class, depending on the model.
    pub warning_score: f64,
}

impl Prediction {
    /// Class with the lower expected cost given the warning score.
    pub fn min_expected_cost(&self, cm: &CostMatrix) -> ClassLabel {
        let p = self.warning_score;
        if p * cm.cost_fn >= (1.0 - p) * cm.cost_fp {
            ClassLabel::Warning
        } else {
            ClassLabel::Safe
        }
    }
}

pub trait Classifier {
    fn predict(&self, x: &[f64; N_FEATURES]) -> Prediction;

    /// Prediction together with its wall-clock latency.
    fn predict_timed(&self, x: &[f64; N_FEATURES]) -> (Prediction, Duration) {
        let start = Instant::now();
        let p = self.predict(x);
        (p, start.elapsed())
    }

    fn predict_batch(&self, xs: &[[f64; N_FEATURES]]) -> Vec<ClassLabel> {
        xs.iter().map(|x| self.predict(x).label).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Tree(TreeModel),
    Forest(ForestModel),
    Knn(KnnModel),
    NaiveBayes(NaiveBayesModel),
}

impl Model {
    pub fn kind(&self) -> &'static str {
        match self {
            Model::Tree(_) => "tree",
            Model::Forest(_) => "forest",
            Model::Knn(_) => "knn",
            Model::NaiveBayes(_) => "naive-bayes",
        }
    }
}

impl Classifier for Model {
    fn predict(&self, x: &[f64; N_FEATURES]) -> Prediction {
        match self {
            Model::Tree(m) => m.predict(x),
            Model::Forest(m) => m.predict(x),
            Model::Knn(m) => m.predict(x),
            Model::NaiveBayes(m) => m.predict(x),
        }
    }
}

/// A learner with its hyper-parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum ClassifierSpec {
    C45(C45Params),
    RandomForest(ForestParams),
    Knn { k: usize },
    NaiveBayes,
}

impl ClassifierSpec {
    pub fn id(&self) -> String {
        match self {
            ClassifierSpec::C45(_) => "c45".into(),
            ClassifierSpec::RandomForest(_) => "rf".into(),
            ClassifierSpec::Knn { k } => format!("knn{k}"),
            ClassifierSpec::NaiveBayes => "nb".into(),
        }
    }

    /// Trains on already cost-weighted instances.
    pub fn train(&self, instances: &[LabeledInstance], seed: u64) -> Result<Model> {
        Ok(match self {
            ClassifierSpec::C45(p) => Model::Tree(train_c45(instances, p)?),
            ClassifierSpec::RandomForest(p) => {
                Model::Forest(train_random_forest(instances, p, seed)?)
            }
            ClassifierSpec::Knn { k } => Model::Knn(train_knn(instances, *k)?),
            ClassifierSpec::NaiveBayes => Model::NaiveBayes(train_naive_bayes(instances)?),
        })
    }
}
