use std::collections::HashMap;

use serde::Serialize;

use crate::error::Result;
use crate::model::{
    AttributeBalanceCheck, Dataset, DisjointnessCheck, IdentityBalanceCheck, IdentityRatioCheck,
    ImageBalanceCheck, Partition, PartitionCounts, RatioGap, SplitAssignment, SplitConfig,
    SplitReport,
};

/// Per-partition aggregates from which every criterion except
/// disjointness can be judged.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Tally {
    pub groups: [u64; 3],
    pub images: [u64; 3],
    /// Positive counts, `positives[p * m + j]`.
    pub positives: Vec<u64>,
    pub m: usize,
}

impl Tally {
    pub fn new(m: usize) -> Self {
        Tally {
            groups: [0; 3],
            images: [0; 3],
            positives: vec![0; 3 * m],
            m,
        }
    }

    pub fn total_groups(&self) -> u64 {
        self.groups.iter().sum()
    }

    pub fn positives_of(&self, p: usize) -> &[u64] {
        &self.positives[p * self.m..(p + 1) * self.m]
    }

    /// Largest per-attribute ratio gap between two partitions.
    fn worst_gap(&self, a: usize, b: usize) -> Option<(f64, usize)> {
        if self.images[a] == 0 || self.images[b] == 0 {
            return None;
        }
        let (na, nb) = (self.images[a] as f64, self.images[b] as f64);
        let mut worst: Option<(f64, usize)> = None;
        for (j, (&pa, &pb)) in self
            .positives_of(a)
            .iter()
            .zip(self.positives_of(b))
            .enumerate()
        {
            let gap = (pa as f64 / na - pb as f64 / nb).abs();
            if worst.is_none_or(|(w, _)| gap > w) {
                worst = Some((gap, j));
            }
        }
        worst
    }
}

/// Violation magnitudes of the split criteria, each normalized by its
/// threshold; every term is zero exactly when its criterion holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ViolationObjective {
    pub identity_ratio: f64,
    pub identity_balance: f64,
    pub image_balance: f64,
    /// Summed over attributes (and over both pairs when the train-test
    /// check is enabled).
    pub attribute_balance: f64,
    pub total: f64,
}

impl ViolationObjective {
    pub fn is_satisfied(&self) -> bool {
        self.total == 0.0
    }
}

/// Largest integer strictly below `threshold`.
fn strict_limit(threshold: f64) -> i64 {
    if threshold <= 0.0 {
        -1
    } else {
        threshold.ceil() as i64 - 1
    }
}

fn integer_excess(value: u64, threshold: f64) -> f64 {
    let over = value as i64 - strict_limit(threshold);
    if over <= 0 {
        0.0
    } else {
        over as f64 / threshold.max(1.0)
    }
}

/// Positive whenever `value >= limit`, including equality.
fn strict_excess(value: f64, limit: f64) -> f64 {
    if value < limit {
        0.0
    } else {
        (value - limit) / limit + f64::EPSILON
    }
}

fn max_relative_deviation(groups: &[u64; 3], targets: &[f64; 3]) -> (f64, [f64; 3]) {
    let total: u64 = groups.iter().sum();
    let proportions = groups.map(|g| {
        if total == 0 {
            0.0
        } else {
            g as f64 / total as f64
        }
    });
    let dev = proportions
        .iter()
        .zip(targets)
        .map(|(p, t)| (p - t).abs() / t)
        .fold(0.0, f64::max);
    (dev, proportions)
}

fn pair_excess(tally: &Tally, a: usize, b: usize, t_attr: f64) -> f64 {
    if tally.images[a] == 0 || tally.images[b] == 0 {
        return tally.m as f64 / t_attr;
    }
    let (na, nb) = (tally.images[a] as f64, tally.images[b] as f64);
    tally
        .positives_of(a)
        .iter()
        .zip(tally.positives_of(b))
        .map(|(&pa, &pb)| strict_excess((pa as f64 / na - pb as f64 / nb).abs(), t_attr))
        .sum()
}

pub(crate) fn objective_of(tally: &Tally, config: &SplitConfig) -> ViolationObjective {
    let (train, valid, test) = (0, 1, 2);
    let targets = config.target_proportions();
    let (dev, _) = max_relative_deviation(&tally.groups, &targets);
    let empty = tally.groups.iter().filter(|&&g| g == 0).count() as f64;
    let identity_ratio = (dev - config.ratio_tolerance).max(0.0) / config.ratio_tolerance + empty;

    let id_threshold = tally.total_groups() as f64 * config.t_id;
    let identity_balance = integer_excess(
        tally.groups[valid].abs_diff(tally.groups[test]),
        id_threshold,
    );

    let image_balance = integer_excess(
        tally.images[valid].abs_diff(tally.images[test]),
        config.t_img as f64,
    );

    let mut attribute_balance = pair_excess(tally, valid, test, config.t_attr);
    if config.c5_train_pair {
        attribute_balance += pair_excess(tally, train, test, config.t_attr);
    }

    let w = &config.weights;
    let total = w.identity_ratio * identity_ratio
        + w.identity_balance * identity_balance
        + w.image_balance * image_balance
        + w.attribute_balance * attribute_balance;
    ViolationObjective {
        identity_ratio,
        identity_balance,
        image_balance,
        attribute_balance,
        total,
    }
}

/// Per-partition tally of a dataset under an assignment. Identities that
/// straddle partitions are counted once in each.
pub(crate) fn tally_assignment(
    dataset: &Dataset,
    assignment: &SplitAssignment,
) -> (Tally, [u64; 3]) {
    let m = dataset.attribute_count();
    let mut tally = Tally::new(m);
    let mut seen: HashMap<&str, [bool; 3]> = HashMap::new();
    for (i, record) in dataset.records().iter().enumerate() {
        let p = assignment.partition_of(i).index();
        tally.images[p] += 1;
        for (j, &label) in record.labels.iter().enumerate() {
            tally.positives[p * m + j] += u64::from(label);
        }
        match &record.identity {
            Some(id) => seen.entry(id.as_str()).or_default()[p] = true,
            None => tally.groups[p] += 1,
        }
    }
    let mut labeled = [0u64; 3];
    for present in seen.values() {
        for p in 0..3 {
            if present[p] {
                labeled[p] += 1;
                tally.groups[p] += 1;
            }
        }
    }
    (tally, labeled)
}

fn disjointness(dataset: &Dataset, assignment: &SplitAssignment) -> DisjointnessCheck {
    let mut seen: HashMap<&str, [bool; 3]> = HashMap::new();
    for (i, record) in dataset.records().iter().enumerate() {
        if let Some(id) = &record.identity {
            seen.entry(id.as_str()).or_default()[assignment.partition_of(i).index()] = true;
        }
    }
    let shared = |a: usize, b: usize| seen.values().filter(|s| s[a] && s[b]).count() as u64;
    let (train_valid, train_test, valid_test) = (shared(0, 1), shared(0, 2), shared(1, 2));
    DisjointnessCheck {
        train_valid,
        train_test,
        valid_test,
        pass: train_valid == 0 && train_test == 0 && valid_test == 0,
    }
}

fn ratio_gap(tally: &Tally, a: usize, b: usize, t_attr: f64, names: &[String]) -> RatioGap {
    match tally.worst_gap(a, b) {
        Some((gap, j)) => RatioGap {
            max_gap: Some(gap),
            attribute: Some(names[j].clone()),
            pass: gap < t_attr,
        },
        None => RatioGap {
            max_gap: None,
            attribute: None,
            pass: false,
        },
    }
}

/// Measures all five criteria of `assignment` against `config`.
///
/// Comparisons for identity balance, image balance and attribute balance
/// are strict. Identity counts treat each unannotated image as its own
/// identity; `labeled_identities` reports annotated identities alone.
pub fn criteria_evaluate(
    dataset: &Dataset,
    assignment: &SplitAssignment,
    config: &SplitConfig,
) -> Result<SplitReport> {
    assignment.check_covers(dataset)?;
    let (tally, labeled) = tally_assignment(dataset, assignment);
    let (train, valid, test) = (
        Partition::Train.index(),
        Partition::Valid.index(),
        Partition::Test.index(),
    );

    let targets = config.target_proportions();
    let (dev, proportions) = max_relative_deviation(&tally.groups, &targets);
    let c1 = IdentityRatioCheck {
        identities: PartitionCounts::from_array(tally.groups),
        labeled_identities: PartitionCounts::from_array(labeled),
        proportions,
        targets,
        max_relative_deviation: dev,
        tolerance: config.ratio_tolerance,
        pass: tally.groups.iter().all(|&g| g > 0) && dev <= config.ratio_tolerance,
    };

    let c2 = disjointness(dataset, assignment);

    let all_identities = tally.total_groups();
    let threshold = all_identities as f64 * config.t_id;
    let difference = tally.groups[valid].abs_diff(tally.groups[test]);
    let c3 = IdentityBalanceCheck {
        valid: tally.groups[valid],
        test: tally.groups[test],
        difference,
        all_identities,
        threshold,
        pass: (difference as f64) < threshold,
    };

    let difference = tally.images[valid].abs_diff(tally.images[test]);
    let c4 = ImageBalanceCheck {
        images: PartitionCounts::from_array(tally.images),
        difference,
        threshold: config.t_img,
        pass: difference < config.t_img,
    };

    let names = dataset.catalog().names();
    let valid_test = ratio_gap(&tally, valid, test, config.t_attr, names);
    let train_test = config
        .c5_train_pair
        .then(|| ratio_gap(&tally, train, test, config.t_attr, names));
    let pass = valid_test.pass && train_test.as_ref().is_none_or(|g| g.pass);
    let c5 = AttributeBalanceCheck {
        valid_test,
        train_test,
        threshold: config.t_attr,
        pass,
    };

    let pass = c1.pass && c2.pass && c3.pass && c4.pass && c5.pass;
    Ok(SplitReport {
        c1_identity_ratio: c1,
        c2_disjoint: c2,
        c3_identity_balance: c3,
        c4_image_balance: c4,
        c5_attribute_balance: c5,
        pass,
    })
}

/// Search objective of an arbitrary assignment.
pub fn objective(
    dataset: &Dataset,
    assignment: &SplitAssignment,
    config: &SplitConfig,
) -> Result<ViolationObjective> {
    assignment.check_covers(dataset)?;
    Ok(objective_of(
        &tally_assignment(dataset, assignment).0,
        config,
    ))
}
