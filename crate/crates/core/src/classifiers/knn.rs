use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{Classifier, LabeledInstance, Prediction};
use crate::error::{Error, Result};
use crate::features::N_FEATURES;
use crate::trajdata::ClassLabel;

/// Memorized training set, min-max normalized with the training ranges.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnModel {
    pub k: usize,
    pub min: [f64; N_FEATURES],
    pub max: [f64; N_FEATURES],
    /// Normalized features, label and weight of each training instance.
    pub points: Vec<LabeledInstance>,
}

pub fn train_knn(instances: &[LabeledInstance], k: usize) -> Result<KnnModel> {
    if instances.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if k == 0 {
        return Err(Error::InvalidConfig("k must be at least 1".into()));
    }
    if k > instances.len() {
        return Err(Error::KTooLarge {
            k,
            n: instances.len(),
        });
    }
    let mut min = [f64::INFINITY; N_FEATURES];
    let mut max = [f64::NEG_INFINITY; N_FEATURES];
    for inst in instances {
        if inst.features.iter().any(|v| !v.is_finite())
            || !(inst.weight >= 0.0 && inst.weight.is_finite())
        {
            return Err(Error::InvalidInput(
                "non-finite feature or invalid weight".into(),
            ));
        }
        for d in 0..N_FEATURES {
            min[d] = min[d].min(inst.features[d]);
            max[d] = max[d].max(inst.features[d]);
        }
    }
    let mut model = KnnModel {
        k,
        min,
        max,
        points: Vec::with_capacity(instances.len()),
    };
    model.points = instances
        .iter()
        .map(|i| LabeledInstance {
            features: model.normalize(&i.features),
            ..i.clone()
        })
        .collect();
    Ok(model)
}

#[derive(PartialEq)]
struct Candidate {
    dist: f64,
    index: usize,
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist
            .total_cmp(&other.dist)
            .then(self.index.cmp(&other.index))
    }
}

impl KnnModel {
    /// Constant training dimensions map to 0.
    pub fn normalize(&self, x: &[f64; N_FEATURES]) -> [f64; N_FEATURES] {
        std::array::from_fn(|d| {
            let range = self.max[d] - self.min[d];
            if range > 0.0 {
                (x[d] - self.min[d]) / range
            } else {
                0.0
            }
        })
    }

    /// Indices of the k nearest training points, nearest first; equal
    /// distances keep training order.
    pub fn neighbours(&self, x: &[f64; N_FEATURES]) -> Vec<usize> {
        let q = self.normalize(x);
        let mut heap = BinaryHeap::with_capacity(self.k + 1);
        for (index, p) in self.points.iter().enumerate() {
            // squared distance orders the same as Euclidean
            let dist: f64 = (0..N_FEATURES)
                .map(|d| (p.features[d] - q[d]).powi(2))
                .sum();
            let c = Candidate { dist, index };
            if heap.len() < self.k {
                heap.push(c);
            } else if heap.peek().is_some_and(|worst| c < *worst) {
                heap.pop();
                heap.push(c);
            }
        }
        heap.into_sorted_vec()
            .into_iter()
            .map(|c| c.index)
            .collect()
    }
}

impl Classifier for KnnModel {
    fn predict(&self, x: &[f64; N_FEATURES]) -> Prediction {
        let (mut warning, mut safe) = (0.0, 0.0);
        for i in self.neighbours(x) {
            let p = &self.points[i];
            if p.label.is_warning() {
                warning += p.weight;
            } else {
                safe += p.weight;
            }
        }
        let total = warning + safe;
        let label = if warning >= safe {
            ClassLabel::Warning
        } else {
            ClassLabel::Safe
        };
        let warning_score = if total > 0.0 { warning / total } else { 0.5 };
        Prediction {
            label,
            warning_score,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::{apply_cost_reweighting, CostMatrix};
    use ClassLabel::{Safe, Warning};

    fn pt(x: f64, y: f64, l: ClassLabel) -> LabeledInstance {
        LabeledInstance::new([x, y, 3.0, 0.0, 0.0], l)
    }

    #[test]
    fn exact_match_with_k1() {
        let data = vec![
            pt(0.0, 0.0, Safe),
            pt(1.0, 1.0, Warning),
            pt(0.2, 0.9, Safe),
        ];
        let m = train_knn(&data, 1).unwrap();
        for d in &data {
            assert_eq!(m.predict(&d.features).label, d.label);
        }
    }

    #[test]
    fn global_vote_follows_weight() {
        let mut data: Vec<_> = (0..5).map(|i| pt(i as f64, 0.0, Safe)).collect();
        data.push(pt(9.0, 9.0, Warning));
        let m = train_knn(&data, 6).unwrap();
        assert_eq!(m.predict(&[0.0; 5]).label, Safe);
        let w = apply_cost_reweighting(&data, &CostMatrix::WARNING_FIVE_TO_ONE);
        // 5 vs 5 is a tie
        assert_eq!(train_knn(&w, 6).unwrap().predict(&[0.0; 5]).label, Warning);
        let w = apply_cost_reweighting(&data, &CostMatrix::new(6.0, 1.0).unwrap());
        assert_eq!(train_knn(&w, 6).unwrap().predict(&[0.0; 5]).label, Warning);
    }

    #[test]
    fn distance_ties_keep_training_order() {
        let data = vec![
            pt(1.0, 0.0, Warning),
            pt(-1.0, 0.0, Safe),
            pt(0.0, 5.0, Safe),
        ];
        let m = train_knn(&data, 1).unwrap();
        assert_eq!(m.neighbours(&[0.0, 0.0, 0.0, 0.0, 0.0]), vec![0]);
        let data = vec![
            pt(-1.0, 0.0, Safe),
            pt(1.0, 0.0, Warning),
            pt(0.0, 5.0, Safe),
        ];
        let m = train_knn(&data, 1).unwrap();
        assert_eq!(m.predict(&[0.0; 5]).label, Safe);
    }

    #[test]
    fn constant_dimension_normalizes_to_zero() {
        let m = train_knn(&[pt(0.0, 0.0, Safe), pt(2.0, 4.0, Warning)], 1).unwrap();
        assert_eq!(
            m.normalize(&[1.0, 1.0, 3.0, 0.0, 0.0]),
            [0.5, 0.25, 0.0, 0.0, 0.0]
        );
    }

    #[test]
    fn rejects_large_k() {
        let data = vec![pt(0.0, 0.0, Safe)];
        assert_eq!(
            train_knn(&data, 2).unwrap_err(),
            Error::KTooLarge { k: 2, n: 1 }
        );
        assert!(train_knn(&data, 0).is_err());
    }
}
