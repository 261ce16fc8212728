//! Identity-leakage and attribute statistics of a dataset under a split.

use std::collections::{HashMap, HashSet};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Dataset, Partition, SplitAssignment};

/// Identity overlap between the train and test partitions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverlapReport {
    /// Annotated identities present in both train and test.
    pub common_identity_count: u64,
    pub test_images: u64,
    /// Test images whose identity also appears in train.
    pub common_test_images: u64,
    pub common_image_fraction_test: f64,
    /// Set when some images lack an identity; the fraction is then only a
    /// lower bound on the true leakage.
    pub lower_bound: bool,
}

pub fn overlap_report(dataset: &Dataset, assignment: &SplitAssignment) -> Result<OverlapReport> {
    assignment.check_covers(dataset)?;
    let mut train_ids = HashSet::new();
    for i in assignment.members(Partition::Train) {
        if let Some(id) = &dataset.records()[i].identity {
            train_ids.insert(id.as_str());
        }
    }
    let mut common = HashSet::new();
    let mut test_images = 0u64;
    let mut common_test_images = 0u64;
    for i in assignment.members(Partition::Test) {
        test_images += 1;
        if let Some(id) = dataset.records()[i].identity.as_deref() {
            if train_ids.contains(id) {
                common.insert(id);
                common_test_images += 1;
            }
        }
    }
    let fraction = if test_images == 0 {
        0.0
    } else {
        common_test_images as f64 / test_images as f64
    };
    Ok(OverlapReport {
        common_identity_count: common.len() as u64,
        test_images,
        common_test_images,
        common_image_fraction_test: fraction,
        lower_bound: dataset.has_missing_identity(),
    })
}

/// Imbalance weight of one label: `e^(1-r)` for a positive label and `e^r`
/// for a negative one, where `r` is the attribute's positive ratio in the
/// training set.
pub fn sample_weight(ratio: f64, positive: bool) -> Result<f64> {
    if !(0.0..=1.0).contains(&ratio) {
        return Err(Error::Domain(format!(
            "positive ratio must lie in [0,1], got {ratio}"
        )));
    }
    Ok(weight_unchecked(ratio, positive))
}

#[inline]
pub(crate) fn weight_unchecked(ratio: f64, positive: bool) -> f64 {
    if positive {
        (1.0 - ratio).exp()
    } else {
        ratio.exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttributeStat {
    pub name: String,
    pub positives: u64,
    pub ratio: f64,
    pub weight_positive: f64,
    pub weight_negative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttributeStats {
    /// Partition the ratios were measured on, or `None` for the whole dataset.
    pub partition: Option<Partition>,
    pub records: u64,
    pub attributes: Vec<AttributeStat>,
}

impl AttributeStats {
    pub fn ratios(&self) -> Vec<f64> {
        self.attributes.iter().map(|a| a.ratio).collect()
    }
}

fn stats_over(
    dataset: &Dataset,
    members: impl Iterator<Item = usize>,
    partition: Option<Partition>,
) -> Result<AttributeStats> {
    let m = dataset.attribute_count();
    let mut positives = vec![0u64; m];
    let mut records = 0u64;
    for i in members {
        records += 1;
        for (count, &label) in positives.iter_mut().zip(&dataset.records()[i].labels) {
            *count += u64::from(label);
        }
    }
    if records == 0 {
        return Err(Error::Domain(format!(
            "partition {} is empty",
            partition.map_or("<all>", Partition::name)
        )));
    }
    let attributes = dataset
        .catalog()
        .names()
        .iter()
        .zip(positives)
        .map(|(name, positives)| {
            let ratio = positives as f64 / records as f64;
            AttributeStat {
                name: name.clone(),
                positives,
                ratio,
                weight_positive: weight_unchecked(ratio, true),
                weight_negative: weight_unchecked(ratio, false),
            }
        })
        .collect();
    Ok(AttributeStats {
        partition,
        records,
        attributes,
    })
}

/// Per-attribute positive ratio within one partition, with the matching
/// imbalance weights.
pub fn positive_ratios(
    dataset: &Dataset,
    assignment: &SplitAssignment,
    partition: Partition,
) -> Result<AttributeStats> {
    assignment.check_covers(dataset)?;
    stats_over(dataset, assignment.members(partition), Some(partition))
}

/// Positive ratios over every record, for datasets that already are a
/// training set.
pub fn positive_ratios_all(dataset: &Dataset) -> Result<AttributeStats> {
    stats_over(dataset, 0..dataset.len(), None)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityShare {
    pub identity: String,
    pub images: u64,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnlabeledShare {
    pub images: u64,
    pub fraction: f64,
}

/// Share of a partition's images held by each identity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityDistribution {
    pub partition: Partition,
    pub images: u64,
    /// In order of first appearance.
    pub identities: Vec<IdentityShare>,
    /// Images without an identity, pooled.
    pub unlabeled: Option<UnlabeledShare>,
}

pub fn identity_distribution(
    dataset: &Dataset,
    assignment: &SplitAssignment,
    partition: Partition,
) -> Result<IdentityDistribution> {
    assignment.check_covers(dataset)?;
    let mut order: Vec<&str> = Vec::new();
    let mut counts: HashMap<&str, u64> = HashMap::new();
    let mut unlabeled = 0u64;
    let mut images = 0u64;
    for i in assignment.members(partition) {
        images += 1;
        match dataset.records()[i].identity.as_deref() {
            Some(id) => {
                let c = counts.entry(id).or_insert_with(|| {
                    order.push(id);
                    0
                });
                *c += 1;
            }
            None => unlabeled += 1,
        }
    }
    let frac = |n: u64| {
        if images == 0 {
            0.0
        } else {
            n as f64 / images as f64
        }
    };
    Ok(IdentityDistribution {
        partition,
        images,
        identities: order
            .into_iter()
            .map(|id| IdentityShare {
                identity: id.to_owned(),
                images: counts[id],
                fraction: frac(counts[id]),
            })
            .collect(),
        unlabeled: (unlabeled > 0).then(|| UnlabeledShare {
            images: unlabeled,
            fraction: frac(unlabeled),
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AttributeCatalog, Record};
    use Partition::*;

    fn ds(rows: &[(Option<&str>, u8)]) -> Dataset {
        let records = rows
            .iter()
            .enumerate()
            .map(|(i, (id, l))| Record::new(format!("i{i}"), *id, vec![*l]))
            .collect();
        Dataset::new(AttributeCatalog::new(["a"]).unwrap(), records).unwrap()
    }

    #[test]
    fn overlap_hand_fixture() {
        // TEST = {p1 image, p3 image}; TRAIN holds p1 and p2, VALID holds p4.
        let d = ds(&[
            (Some("p1"), 0),
            (Some("p2"), 0),
            (Some("p4"), 0),
            (Some("p1"), 0),
            (Some("p3"), 0),
        ]);
        let a = SplitAssignment::new(vec![Train, Train, Valid, Test, Test]);
        let r = overlap_report(&d, &a).unwrap();
        assert_eq!(r.common_identity_count, 1);
        assert_eq!(r.common_image_fraction_test, 0.5);
        assert!(!r.lower_bound);
    }

    #[test]
    fn unlabeled_test_images_only_in_denominator() {
        let d = ds(&[(Some("p1"), 0), (Some("p1"), 0), (None, 0), (None, 0)]);
        let a = SplitAssignment::new(vec![Train, Test, Test, Valid]);
        let r = overlap_report(&d, &a).unwrap();
        assert_eq!((r.common_test_images, r.test_images), (1, 2));
        assert!(r.lower_bound);
    }

    #[test]
    fn ratio_examples() {
        let d = ds(&[(None, 1), (None, 1), (None, 1), (None, 1)]);
        let a = SplitAssignment::new(vec![Train; 4]);
        assert_eq!(positive_ratios(&d, &a, Train).unwrap().ratios(), [1.0]);

        let d = ds(&[(None, 1), (None, 0), (None, 1), (None, 0)]);
        assert_eq!(positive_ratios(&d, &a, Train).unwrap().ratios(), [0.5]);

        let d = ds(&[(None, 1), (None, 0), (None, 0), (None, 1)]);
        let a = SplitAssignment::new(vec![Train, Train, Train, Test]);
        assert_eq!(
            positive_ratios(&d, &a, Train).unwrap().ratios(),
            [1.0 / 3.0]
        );
        assert!(positive_ratios(&d, &a, Valid).is_err());
    }

    #[test]
    fn weight_examples() {
        let e_half = 1.648_721_270_700_128_f64;
        assert!((sample_weight(0.5, true).unwrap() - e_half).abs() < 1e-12);
        assert!((sample_weight(0.5, false).unwrap() - e_half).abs() < 1e-12);
        assert_eq!(sample_weight(1.0, true).unwrap(), 1.0);
        assert!((sample_weight(0.1, true).unwrap() - 2.459_603_111_156_95).abs() < 1e-12);
        assert!((sample_weight(0.1, false).unwrap() - 1.105_170_918_075_648).abs() < 1e-12);
        assert!(sample_weight(1.2, true).is_err());
        assert!(sample_weight(-0.1, false).is_err());
    }

    #[test]
    fn distribution_examples() {
        let d = ds(&[(Some("p1"), 0), (Some("p1"), 0), (Some("p2"), 0)]);
        let a = SplitAssignment::new(vec![Test; 3]);
        let h = identity_distribution(&d, &a, Test).unwrap();
        assert_eq!(h.identities.len(), 2);
        assert_eq!(h.identities[0].fraction, 2.0 / 3.0);
        assert_eq!(h.identities[1].fraction, 1.0 / 3.0);
        assert!(h.unlabeled.is_none());

        let d = ds(&[(None, 0), (None, 0)]);
        let a = SplitAssignment::new(vec![Train; 2]);
        let h = identity_distribution(&d, &a, Train).unwrap();
        assert!(h.identities.is_empty());
        assert_eq!(h.unlabeled.unwrap().fraction, 1.0);
    }

    #[test]
    fn distribution_ten_images_four_identities() {
        // p1 x4, p2 x3, p3 x2, p4 x1
        let ids = ["p1", "p2", "p1", "p3", "p2", "p1", "p4", "p3", "p2", "p1"];
        let rows: Vec<(Option<&str>, u8)> = ids.iter().map(|i| (Some(*i), 0)).collect();
        let d = ds(&rows);
        let a = SplitAssignment::new(vec![Train; 10]);
        let h = identity_distribution(&d, &a, Train).unwrap();
        let got: Vec<(&str, u64)> = h
            .identities
            .iter()
            .map(|s| (s.identity.as_str(), s.images))
            .collect();
        assert_eq!(got, [("p1", 4), ("p2", 3), ("p3", 2), ("p4", 1)]);
        let sum: f64 = h.identities.iter().map(|s| s.fraction).sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }
}
