use std::f64::consts::PI;

use super::{Classifier, LabeledInstance, Prediction};
use crate::error::{Error, Result};
use crate::features::N_FEATURES;
use crate::trajdata::ClassLabel;

pub const VARIANCE_FLOOR: f64 = 1e-9;

/// Weighted per-feature Gaussians for one class.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassGaussian {
    pub prior: f64,
    pub mean: [f64; N_FEATURES],
    pub variance: [f64; N_FEATURES],
}

impl ClassGaussian {
    fn fit(instances: &[&LabeledInstance], total_weight: f64) -> Option<Self> {
        let w: f64 = instances.iter().map(|i| i.weight).sum();
        if instances.is_empty() || w <= 0.0 {
            return None;
        }
        let mean: [f64; N_FEATURES] = std::array::from_fn(|d| {
            instances
                .iter()
                .map(|i| i.weight * i.features[d])
                .sum::<f64>()
                / w
        });
        let variance = std::array::from_fn(|d| {
            let v = instances
                .iter()
                .map(|i| i.weight * (i.features[d] - mean[d]).powi(2))
                .sum::<f64>()
                / w;
            v.max(VARIANCE_FLOOR)
        });
        Some(ClassGaussian {
            prior: w / total_weight,
            mean,
            variance,
        })
    }

    pub fn log_joint(&self, x: &[f64; N_FEATURES]) -> f64 {
        let mut l = self.prior.ln();
        for ((xd, m), v) in x.iter().zip(&self.mean).zip(&self.variance) {
            l -= 0.5 * ((2.0 * PI * v).ln() + (xd - m).powi(2) / v);
        }
        l
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NaiveBayesModel {
    pub warning: ClassGaussian,
    pub safe: ClassGaussian,
}

pub fn train_naive_bayes(instances: &[LabeledInstance]) -> Result<NaiveBayesModel> {
    if instances.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if instances.iter().any(|i| {
        i.features.iter().any(|v| !v.is_finite()) || !(i.weight >= 0.0 && i.weight.is_finite())
    }) {
        return Err(Error::InvalidInput(
            "non-finite feature or invalid weight".into(),
        ));
    }
    let total: f64 = instances.iter().map(|i| i.weight).sum();
    let (warn, safe): (Vec<&LabeledInstance>, Vec<&LabeledInstance>) =
        instances.iter().partition(|i| i.label.is_warning());
    Ok(NaiveBayesModel {
        warning: ClassGaussian::fit(&warn, total).ok_or(Error::MissingClass("Warning"))?,
        safe: ClassGaussian::fit(&safe, total).ok_or(Error::MissingClass("Safe"))?,
    })
}

impl Classifier for NaiveBayesModel {
    fn predict(&self, x: &[f64; N_FEATURES]) -> Prediction {
        let lw = self.warning.log_joint(x);
        let ls = self.safe.log_joint(x);
        let label = if lw >= ls {
            ClassLabel::Warning
        } else {
            ClassLabel::Safe
        };
        // posterior of Warning, computed stably
        let warning_score = 1.0 / (1.0 + (ls - lw).exp());
        Prediction {
            label,
            warning_score,
        }
    }
}
