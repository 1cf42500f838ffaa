use rand::Rng;

use super::tree::{validate_feature_set, Grower, TrainingData};
use super::{Classifier, LabeledInstance, Prediction, TreeModel};
use crate::error::{Error, Result};
use crate::features::N_FEATURES;
use crate::rng;
use crate::trajdata::ClassLabel;

#[derive(Debug, Clone, PartialEq)]
pub struct ForestParams {
    pub n_trees: usize,
    pub features_per_split: usize,
    /// Weighted bootstrap per tree; otherwise every tree sees the full set.
    pub bootstrap: bool,
    pub min_leaf_weight: f64,
    pub max_depth: Option<usize>,
    pub features: Vec<usize>,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            features_per_split: 3,
            bootstrap: true,
            min_leaf_weight: 2.0,
            max_depth: None,
            features: (0..N_FEATURES).collect(),
        }
    }
}

impl ForestParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::InvalidConfig("n_trees must be at least 1".into()));
        }
        if !(1..=N_FEATURES).contains(&self.features_per_split) {
            return Err(Error::InvalidConfig(format!(
                "features_per_split must lie in 1..={N_FEATURES}"
            )));
        }
        if !(self.min_leaf_weight >= 0.0 && self.min_leaf_weight.is_finite()) {
            return Err(Error::InvalidConfig(
                "min_leaf_weight must be non-negative".into(),
            ));
        }
        if self.max_depth == Some(0) {
            return Err(Error::InvalidConfig("max_depth must be at least 1".into()));
        }
        validate_feature_set(&self.features)
    }
}

/// Unpruned trees voting by majority.
#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    pub trees: Vec<TreeModel>,
    pub params: ForestParams,
    pub seed: u64,
}

impl ForestModel {
    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn warning_votes(&self, x: &[f64; N_FEATURES]) -> usize {
        self.trees
            .iter()
            .filter(|t| t.leaf_for(x).class().is_warning())
            .count()
    }
}

impl Classifier for ForestModel {
    fn predict(&self, x: &[f64; N_FEATURES]) -> Prediction {
        let votes = self.warning_votes(x);
        let n = self.trees.len();
        // ties go to Warning
        let label = if 2 * votes >= n {
            ClassLabel::Warning
        } else {
            ClassLabel::Safe
        };
        Prediction {
            label,
            warning_score: votes as f64 / n as f64,
        }
    }
}

/// Draws `n` indices with probability proportional to weight and returns
/// the multiplicity of each instance.
fn weighted_bootstrap<R: Rng>(weights: &[f64], rng: &mut R) -> Vec<u32> {
    let mut cumulative = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for &w in weights {
        acc += w;
        cumulative.push(acc);
    }
    let mut counts = vec![0u32; weights.len()];
    for _ in 0..weights.len() {
        let u = rng.random::<f64>() * acc;
        let i = cumulative
            .partition_point(|&c| c <= u)
            .min(weights.len() - 1);
        counts[i] += 1;
    }
    counts
}

fn grow_tree(
    full: &TrainingData,
    presorted: &[Vec<u32>],
    params: &ForestParams,
    seed: u64,
    index: usize,
) -> TreeModel {
    let mut rng = rng::stream(seed, index as u64);
    let (data, order) = if params.bootstrap {
        let counts = weighted_bootstrap(&full.w, &mut rng);
        let mut remap = vec![u32::MAX; counts.len()];
        let mut sub = TrainingData {
            x: Vec::new(),
            warn: Vec::new(),
            w: Vec::new(),
        };
        for (i, &c) in counts.iter().enumerate() {
            if c > 0 {
                remap[i] = sub.x.len() as u32;
                sub.x.push(full.x[i]);
                sub.warn.push(full.warn[i]);
                sub.w.push(c as f64);
            }
        }
        let order = presorted
            .iter()
            .map(|o| {
                o.iter()
                    .filter_map(|&i| Some(remap[i as usize]).filter(|&r| r != u32::MAX))
                    .collect()
            })
            .collect();
        (std::borrow::Cow::Owned(sub), order)
    } else {
        (std::borrow::Cow::Borrowed(full), presorted.to_vec())
    };
    let mut grower = Grower::new(
        &data,
        order,
        params.min_leaf_weight,
        params.max_depth,
        &params.features,
    )
    .with_features_per_split(params.features_per_split);
    grower.grow_root(Some(&mut rng));
    TreeModel {
        nodes: grower.nodes,
    }
}

/// Trains a random forest. Tree `i` draws from the random stream derived
/// from `(seed, i)`, so the result does not depend on training order.
pub fn train_random_forest(
    instances: &[LabeledInstance],
    params: &ForestParams,
    seed: u64,
) -> Result<ForestModel> {
    params.validate()?;
    if instances.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let data = TrainingData::from_instances(instances)?;
    let presorted = data.presort(&params.features);
    let trees = (0..params.n_trees)
        .map(|i| grow_tree(&data, &presorted, params, seed, i))
        .collect();
    Ok(ForestModel {
        trees,
        params: params.clone(),
        seed,
    })
}
