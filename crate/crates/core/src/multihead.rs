//! Joint-dataset batches with one classification head per dataset.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type DatasetId = u32;
pub type HeadId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub id: DatasetId,
    pub size: usize,
    pub num_classes: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixStrategy {
    /// Every slot picks a dataset with probability proportional to its size.
    #[default]
    Proportional,
    /// Every slot picks a dataset uniformly, then a sample within it.
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct JointSample {
    /// Index within its dataset.
    pub sample_id: usize,
    pub dataset_id: DatasetId,
    pub label: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JointBatch {
    pub samples: Vec<JointSample>,
    pub heads: BTreeMap<DatasetId, HeadId>,
}

/// Synthetic label of a sample: its index modulo the dataset's class count.
fn label_of(spec: &DatasetSpec, sample_id: usize) -> u32 {
    (sample_id % spec.num_classes as usize) as u32
}

/// Draws a batch from the union of `datasets`. Head `h` belongs to the `h`-th
/// dataset in the list.
pub fn compose_batch<R: Rng + ?Sized>(
    datasets: &[DatasetSpec],
    batch_size: usize,
    strategy: MixStrategy,
    rng: &mut R,
) -> Result<JointBatch> {
    if datasets.is_empty() {
        return Err(Error::config("no datasets to sample from"));
    }
    if batch_size == 0 {
        return Err(Error::config("batch size must be at least 1"));
    }
    let mut heads = BTreeMap::new();
    for (h, d) in datasets.iter().enumerate() {
        if d.size == 0 || d.num_classes == 0 {
            return Err(Error::config(format!("dataset {} is empty", d.id)));
        }
        if heads.insert(d.id, h).is_some() {
            return Err(Error::config(format!("dataset id {} listed twice", d.id)));
        }
    }
    let total: usize = datasets.iter().map(|d| d.size).sum();
    let samples = (0..batch_size)
        .map(|_| {
            let (spec, sample_id) = match strategy {
                MixStrategy::Proportional => {
                    // a uniform index into the concatenated datasets
                    let mut idx = rng.random_range(0..total);
                    let spec = datasets
                        .iter()
                        .find(|d| {
                            if idx < d.size {
                                true
                            } else {
                                idx -= d.size;
                                false
                            }
                        })
                        .expect("index within total");
                    (spec, idx)
                }
                MixStrategy::Uniform => {
                    let spec = &datasets[rng.random_range(0..datasets.len())];
                    (spec, rng.random_range(0..spec.size))
                }
            };
            JointSample { sample_id, dataset_id: spec.id, label: label_of(spec, sample_id) }
        })
        .collect();
    Ok(JointBatch { samples, heads })
}

/// One boolean mask per head marking the samples that head is trained on.
pub fn route_masks(batch: &JointBatch) -> Result<BTreeMap<HeadId, Vec<bool>>> {
    let mut masks: BTreeMap<HeadId, Vec<bool>> =
        batch.heads.values().map(|&h| (h, vec![false; batch.samples.len()])).collect();
    for (i, s) in batch.samples.iter().enumerate() {
        let head = batch.heads.get(&s.dataset_id).ok_or(Error::UnknownDataset(s.dataset_id))?;
        masks.get_mut(head).expect("head registered")[i] = true;
    }
    Ok(masks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn ds(id: DatasetId, size: usize) -> DatasetSpec {
        DatasetSpec { id, size, num_classes: 7 }
    }

    #[test]
    fn single_dataset() {
        let mut rng = seeded(0);
        let batch = compose_batch(&[ds(4, 10)], 32, MixStrategy::Proportional, &mut rng).unwrap();
        assert!(batch.samples.iter().all(|s| s.dataset_id == 4 && s.sample_id < 10 && s.label < 7));
        let masks = route_masks(&batch).unwrap();
        assert_eq!(masks.len(), 1);
        assert!(masks[&0].iter().all(|&m| m));
    }

    #[test]
    fn hand_built_masks() {
        let heads = BTreeMap::from([(10, 0), (20, 1)]);
        let samples = [10, 10, 20, 10]
            .iter()
            .enumerate()
            .map(|(i, &d)| JointSample { sample_id: i, dataset_id: d, label: 0 })
            .collect();
        let masks = route_masks(&JointBatch { samples, heads }).unwrap();
        assert_eq!(masks[&0], vec![true, true, false, true]);
        assert_eq!(masks[&1], vec![false, false, true, false]);
    }

    #[test]
    fn unknown_dataset() {
        let batch = JointBatch {
            samples: vec![JointSample { sample_id: 0, dataset_id: 9, label: 0 }],
            heads: BTreeMap::from([(1, 0)]),
        };
        assert!(matches!(route_masks(&batch), Err(Error::UnknownDataset(9))));
    }

    #[test]
    fn bad_inputs() {
        let mut rng = seeded(0);
        assert!(compose_batch(&[], 4, MixStrategy::Uniform, &mut rng).is_err());
        assert!(compose_batch(&[ds(1, 5)], 0, MixStrategy::Uniform, &mut rng).is_err());
        assert!(compose_batch(&[ds(1, 0)], 4, MixStrategy::Uniform, &mut rng).is_err());
        assert!(compose_batch(&[ds(1, 5), ds(1, 6)], 4, MixStrategy::Uniform, &mut rng).is_err());
    }

    #[test]
    fn deterministic_per_rng() {
        let sets = [ds(1, 90), ds(2, 10), ds(3, 33)];
        let a = compose_batch(&sets, 64, MixStrategy::Proportional, &mut seeded(4)).unwrap();
        let b = compose_batch(&sets, 64, MixStrategy::Proportional, &mut seeded(4)).unwrap();
        assert_eq!(a, b);
    }
}
