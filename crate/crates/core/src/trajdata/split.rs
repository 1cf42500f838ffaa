use rand::seq::SliceRandom;

use super::Dataset;
use crate::error::{Error, Result};
use crate::rng;

const MAX_ATTEMPTS: usize = 100;

fn has_both_classes(ds: &Dataset, idx: &[usize]) -> bool {
    let mut warning = false;
    let mut safe = false;
    for &i in idx {
        if ds.instances[i].label.is_warning() {
            warning = true;
        } else {
            safe = true;
        }
        if warning && safe {
            return true;
        }
    }
    false
}

/// Random holdout split. `|train| = round(train_fraction · N)`; instances keep
/// their original relative order inside each partition.
pub fn split_dataset(ds: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidInput(format!(
            "train fraction {train_fraction} outside (0, 1)"
        )));
    }
    let n = ds.len();
    let n_train = (train_fraction * n as f64).round() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = rng::stream(seed, attempt as u64);
        order.sort_unstable();
        order.shuffle(&mut rng);
        let (train, validation) = order.split_at(n_train);
        if has_both_classes(ds, train) && has_both_classes(ds, validation) {
            let pick = |idx: &[usize]| {
                let mut idx = idx.to_vec();
                idx.sort_unstable();
                Dataset {
                    instances: idx.into_iter().map(|i| ds.instances[i].clone()).collect(),
                    provenance: ds.provenance,
                    seed: ds.seed,
                }
            };
            return Ok((pick(train), pick(validation)));
        }
    }
    Err(Error::ClassEmptyPartition(MAX_ATTEMPTS))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::LabeledInstance;
    use crate::trajdata::{ClassLabel, Provenance};

    fn dataset(n: usize) -> Dataset {
        let instances = (0..n)
            .map(|i| {
                let label = if i % 2 == 0 {
                    ClassLabel::Warning
                } else {
                    ClassLabel::Safe
                };
                LabeledInstance::new([i as f64, 0.0, 0.0, 0.0, 0.0], label)
            })
            .collect();
        Dataset::new(instances, Provenance::Synthetic, None).unwrap()
    }

    #[test]
    fn sizes_follow_fraction() {
        let (train, val) = split_dataset(&dataset(10), 0.8, 1).unwrap();
        assert_eq!((train.len(), val.len()), (8, 2));
    }

    #[test]
    fn deterministic_partition() {
        let ds = dataset(100);
        let a = split_dataset(&ds, 0.65, 9).unwrap();
        let b = split_dataset(&ds, 0.65, 9).unwrap();
        assert_eq!(a, b);
        let mut all: Vec<f64> =
            a.0.instances
                .iter()
                .chain(&a.1.instances)
                .map(|i| i.features[0])
                .collect();
        all.sort_by(f64::total_cmp);
        assert_eq!(all, (0..100).map(|i| i as f64).collect::<Vec<_>>());
    }

    #[test]
    fn bad_fraction_and_single_class() {
        assert!(split_dataset(&dataset(10), 1.0, 1).is_err());
        assert!(split_dataset(&dataset(10), 0.0, 1).is_err());
        let one_class = Dataset::new(
            vec![LabeledInstance::new([0.0; 5], ClassLabel::Safe); 10],
            Provenance::Synthetic,
            None,
        )
        .unwrap();
        assert_eq!(
            split_dataset(&one_class, 0.5, 1).unwrap_err(),
            Error::ClassEmptyPartition(100)
        );
    }
}
