//! Fixtures and brute-force reference implementations shared by the
//! integration tests. Nothing here calls into the library's own
//! criteria, metric or loss code.
#![allow(dead_code)]

use std::collections::BTreeSet;

use zsplit::synth::SynthConfig;
use zsplit::{AttributeCatalog, Dataset, Partition, Record, SplitAssignment};

pub fn catalog(m: usize) -> AttributeCatalog {
    AttributeCatalog::new((0..m).map(|j| format!("a{j}"))).unwrap()
}

/// A dataset with the given identities and images per partition and all
/// labels zero. Within a partition the first identity takes the surplus
/// images and every other identity has one.
pub fn dataset_from_counts(identities: [u64; 3], images: [u64; 3]) -> (Dataset, SplitAssignment) {
    let mut records = Vec::new();
    let mut parts = Vec::new();
    for (p, partition) in Partition::ALL.into_iter().enumerate() {
        let (k, n) = (identities[p], images[p]);
        assert!(k >= 1 && n >= k);
        for i in 0..k {
            let count = if i == 0 { n - k + 1 } else { 1 };
            for _ in 0..count {
                records.push(Record::new(
                    format!("img{}", records.len()),
                    Some(&format!("{}-{i}", partition.name())),
                    vec![0],
                ));
                parts.push(partition);
            }
        }
    }
    (
        Dataset::new(catalog(1), records).unwrap(),
        SplitAssignment::new(parts),
    )
}

/// Synthetic dataset shaped like a mid-sized benchmark.
pub fn benchmark_config(seed: u64) -> SynthConfig {
    SynthConfig {
        identity_count: 3000,
        mean_images_per_identity: 4.0,
        attribute_count: 35,
        prevalence_min: 0.05,
        prevalence_max: 0.8,
        coverage: 0.9,
        flip_noise: 0.02,
        seed,
    }
}

/// Annotated identity sets of each partition.
pub fn identity_sets(dataset: &Dataset, assignment: &SplitAssignment) -> [BTreeSet<String>; 3] {
    let mut sets: [BTreeSet<String>; 3] = Default::default();
    for (r, p) in dataset.records().iter().zip(assignment.as_slice()) {
        if let Some(id) = &r.identity {
            sets[p.index()].insert(id.clone());
        }
    }
    sets
}

/// Pairwise intersections of the annotated identity sets.
pub fn shared_identities(dataset: &Dataset, assignment: &SplitAssignment) -> [usize; 3] {
    let [t, v, s] = identity_sets(dataset, assignment);
    [
        t.intersection(&v).count(),
        t.intersection(&s).count(),
        v.intersection(&s).count(),
    ]
}

/// Straightforward re-derivation of the five criteria.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceCriteria {
    pub identities: [u64; 3],
    pub images: [u64; 3],
    pub c1: bool,
    pub c2: bool,
    pub c3: bool,
    pub c4: bool,
    pub c5: bool,
}

impl ReferenceCriteria {
    pub fn all(&self) -> bool {
        self.c1 && self.c2 && self.c3 && self.c4 && self.c5
    }
}

pub fn reference_criteria(
    dataset: &Dataset,
    assignment: &SplitAssignment,
    config: &zsplit::SplitConfig,
) -> ReferenceCriteria {
    let m = dataset.attribute_count();
    let mut ids: [BTreeSet<String>; 3] = Default::default();
    let mut images = [0u64; 3];
    let mut positives = vec![[0u64; 3]; m];
    for (r, p) in dataset.records().iter().zip(assignment.as_slice()) {
        let p = p.index();
        images[p] += 1;
        // Unannotated images stand for themselves.
        let key = match &r.identity {
            Some(id) => format!("id:{id}"),
            None => format!("img:{}", r.image_id),
        };
        ids[p].insert(key);
        for (count, &y) in positives.iter_mut().zip(&r.labels) {
            count[p] += u64::from(y);
        }
    }
    let identities = [
        ids[0].len() as u64,
        ids[1].len() as u64,
        ids[2].len() as u64,
    ];
    let total: u64 = identities.iter().sum();
    let weight: f64 = config.ratio_targets.iter().sum();
    let c1 = identities.iter().all(|&k| k > 0)
        && (0..3).all(|p| {
            let target = config.ratio_targets[p] / weight;
            let actual = identities[p] as f64 / total as f64;
            (actual - target).abs() / target <= config.ratio_tolerance
        });
    let c2 =
        ids[0].is_disjoint(&ids[1]) && ids[0].is_disjoint(&ids[2]) && ids[1].is_disjoint(&ids[2]);
    let c3 = (identities[1] as f64 - identities[2] as f64).abs() < total as f64 * config.t_id;
    let c4 = images[1].abs_diff(images[2]) < config.t_img;
    let gap_ok = |a: usize, b: usize| {
        images[a] > 0
            && images[b] > 0
            && (0..m).all(|j| {
                let ra = positives[j][a] as f64 / images[a] as f64;
                let rb = positives[j][b] as f64 / images[b] as f64;
                (ra - rb).abs() < config.t_attr
            })
    };
    let c5 = gap_ok(1, 2) && (!config.c5_train_pair || gap_ok(0, 2));
    ReferenceCriteria {
        identities,
        images,
        c1,
        c2,
        c3,
        c4,
        c5,
    }
}

/// Brute-force mA and instance metrics from nested label vectors.
#[derive(Debug, Clone, Copy)]
pub struct ReferenceMetrics {
    pub m_a: Option<f64>,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

pub fn reference_metrics(truth: &[Vec<u8>], pred: &[Vec<u8>]) -> ReferenceMetrics {
    let n = truth.len();
    let m = truth[0].len();
    let mut accs = Vec::new();
    for j in 0..m {
        let pos: Vec<usize> = (0..n).filter(|&i| truth[i][j] == 1).collect();
        let neg: Vec<usize> = (0..n).filter(|&i| truth[i][j] == 0).collect();
        if pos.is_empty() || neg.is_empty() {
            continue;
        }
        let hit_pos = pos.iter().filter(|&&i| pred[i][j] == 1).count() as f64;
        let hit_neg = neg.iter().filter(|&&i| pred[i][j] == 0).count() as f64;
        accs.push((hit_pos / pos.len() as f64 + hit_neg / neg.len() as f64) / 2.0);
    }
    let m_a = (!accs.is_empty()).then(|| accs.iter().sum::<f64>() / accs.len() as f64);

    let (mut a, mut p, mut r) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let t: BTreeSet<usize> = (0..m).filter(|&j| truth[i][j] == 1).collect();
        let q: BTreeSet<usize> = (0..m).filter(|&j| pred[i][j] == 1).collect();
        let inter = t.intersection(&q).count() as f64;
        let union = t.union(&q).count() as f64;
        if t.is_empty() && q.is_empty() {
            a += 1.0;
            p += 1.0;
            r += 1.0;
            continue;
        }
        a += inter / union;
        if !q.is_empty() {
            p += inter / q.len() as f64;
        }
        if !t.is_empty() {
            r += inter / t.len() as f64;
        }
    }
    let (accuracy, precision, recall) = (a / n as f64, p / n as f64, r / n as f64);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    ReferenceMetrics {
        m_a,
        accuracy,
        precision,
        recall,
        f1,
    }
}

/// Weighted cross-entropy straight from the log definition, for moderate
/// logits only.
pub fn reference_loss(logits: &[Vec<f64>], labels: &[Vec<u8>], ratios: &[f64]) -> f64 {
    let n = logits.len() as f64;
    let mut total = 0.0;
    for (zs, ys) in logits.iter().zip(labels) {
        for j in 0..zs.len() {
            let p = 1.0 / (1.0 + (-zs[j]).exp());
            total += if ys[j] == 1 {
                -(1.0 - ratios[j]).exp() * p.ln()
            } else {
                -ratios[j].exp() * (1.0 - p).ln()
            };
        }
    }
    total / n
}

/// The 4x2 worked example: truth, predictions.
pub fn worked_example() -> (Vec<Vec<u8>>, Vec<Vec<u8>>) {
    (
        vec![vec![1, 0], vec![1, 1], vec![0, 1], vec![0, 0]],
        vec![vec![1, 0], vec![0, 1], vec![0, 1], vec![1, 0]],
    )
}
