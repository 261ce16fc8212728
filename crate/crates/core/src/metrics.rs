//! Label-based mean accuracy (mA) and instance-based accuracy, precision,
//! recall and F1 for multi-label attribute predictions.
//!
//! Conventions, also echoed in every [`MetricsReport`]:
//! - a score equal to the threshold is positive; logits go through the
//!   sigmoid first;
//! - per image, a ratio with an empty denominator is 1 when the predicted
//!   and true label sets are both empty and 0 otherwise;
//! - F1 is the harmonic mean of the mean precision and the mean recall;
//! - attributes with no positives or no negatives in the evaluated subset
//!   are left out of mA and listed as excluded.

use std::collections::HashSet;

use ndarray::{Array2, ArrayView2};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::io::{PredictionSet, ScoreKind};
use crate::loss::sigmoid;
use crate::model::{Dataset, Partition, SplitAssignment};

/// Thresholds one row of scores. Logits are mapped through the sigmoid
/// before the comparison.
pub fn binarize_scores(scores: &[f64], kind: ScoreKind, threshold: f64) -> Vec<u8> {
    scores
        .iter()
        .map(|&s| {
            let p = match kind {
                ScoreKind::Probs => s,
                ScoreKind::Logits => sigmoid(s),
            };
            u8::from(p >= threshold)
        })
        .collect()
}

/// Binary prediction matrix, rows in the prediction file's order.
pub fn binarize(predictions: &PredictionSet) -> Array2<u8> {
    let m = predictions.rows().next().map_or(0, |(_, s)| s.len());
    let mut out = Array2::zeros((predictions.len(), m));
    for (mut row, (_, scores)) in out.rows_mut().into_iter().zip(predictions.rows()) {
        let bits = binarize_scores(scores, predictions.kind(), predictions.threshold());
        row.iter_mut().zip(bits).for_each(|(d, b)| *d = b);
    }
    out
}

/// Confusion counts of one attribute.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl Confusion {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn merge(&mut self, other: &Confusion) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.tn += other.tn;
        self.fn_ += other.fn_;
    }
}

fn check_pair(labels: &ArrayView2<'_, u8>, predicted: &ArrayView2<'_, u8>) -> Result<()> {
    if labels.dim() != predicted.dim() {
        return Err(Error::shape(
            format!("predictions {:?}", labels.dim()),
            format!("{:?}", predicted.dim()),
        ));
    }
    Ok(())
}

pub fn confusion_per_attribute(
    labels: ArrayView2<'_, u8>,
    predicted: ArrayView2<'_, u8>,
) -> Result<Vec<Confusion>> {
    check_pair(&labels, &predicted)?;
    let mut out = vec![Confusion::default(); labels.ncols()];
    for (y_row, p_row) in labels.rows().into_iter().zip(predicted.rows()) {
        for (c, (&y, &p)) in out.iter_mut().zip(y_row.iter().zip(p_row.iter())) {
            match (y == 1, p == 1) {
                (true, true) => c.tp += 1,
                (false, true) => c.fp += 1,
                (false, false) => c.tn += 1,
                (true, false) => c.fn_ += 1,
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AttributeAccuracy {
    pub attribute: usize,
    pub tpr: f64,
    pub tnr: f64,
    /// Mean of TPR and TNR.
    pub acc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanAccuracy {
    pub m_a: f64,
    pub per_attribute: Vec<AttributeAccuracy>,
    /// Attributes whose TPR or TNR is undefined on this subset.
    pub excluded: Vec<usize>,
}

/// Mean over attributes of `(TPR + TNR) / 2`.
pub fn mean_accuracy(
    labels: ArrayView2<'_, u8>,
    predicted: ArrayView2<'_, u8>,
) -> Result<MeanAccuracy> {
    let confusion = confusion_per_attribute(labels, predicted)?;
    let mut per_attribute = Vec::new();
    let mut excluded = Vec::new();
    for (j, c) in confusion.iter().enumerate() {
        let positives = c.tp + c.fn_;
        let negatives = c.tn + c.fp;
        if positives == 0 || negatives == 0 {
            excluded.push(j);
            continue;
        }
        let tpr = c.tp as f64 / positives as f64;
        let tnr = c.tn as f64 / negatives as f64;
        per_attribute.push(AttributeAccuracy {
            attribute: j,
            tpr,
            tnr,
            acc: (tpr + tnr) / 2.0,
        });
    }
    if per_attribute.is_empty() {
        return Err(Error::UndefinedMeanAccuracy);
    }
    let m_a = per_attribute.iter().map(|a| a.acc).sum::<f64>() / per_attribute.len() as f64;
    Ok(MeanAccuracy {
        m_a,
        per_attribute,
        excluded,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InstanceMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[inline]
fn ratio_or_vacuous(num: u32, den: u32, both_empty: bool) -> f64 {
    if den > 0 {
        f64::from(num) / f64::from(den)
    } else if both_empty {
        1.0
    } else {
        0.0
    }
}

/// Per-image set overlap metrics averaged over images.
pub fn instance_metrics(
    labels: ArrayView2<'_, u8>,
    predicted: ArrayView2<'_, u8>,
) -> Result<InstanceMetrics> {
    check_pair(&labels, &predicted)?;
    let n = labels.nrows();
    if n == 0 {
        return Err(Error::Domain(
            "instance metrics need at least one image".into(),
        ));
    }
    let (mut acc, mut prec, mut rec) = (0.0, 0.0, 0.0);
    for (y_row, p_row) in labels.rows().into_iter().zip(predicted.rows()) {
        let (mut inter, mut union, mut true_n, mut pred_n) = (0u32, 0u32, 0u32, 0u32);
        for (&y, &p) in y_row.iter().zip(p_row.iter()) {
            let (y, p) = (y == 1, p == 1);
            inter += u32::from(y && p);
            union += u32::from(y || p);
            true_n += u32::from(y);
            pred_n += u32::from(p);
        }
        let both_empty = union == 0;
        acc += ratio_or_vacuous(inter, union, both_empty);
        prec += ratio_or_vacuous(inter, pred_n, both_empty);
        rec += ratio_or_vacuous(inter, true_n, both_empty);
    }
    let n = n as f64;
    let (accuracy, precision, recall) = (acc / n, prec / n, rec / n);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(InstanceMetrics {
        accuracy,
        precision,
        recall,
        f1,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subset {
    All,
    CommonIdentity,
    UniqueIdentity,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Conventions {
    pub threshold: f64,
    pub score_kind: ScoreKind,
    pub boundary: &'static str,
    pub empty_sets: &'static str,
    pub f1: &'static str,
    pub ma_exclusion: &'static str,
}

impl Conventions {
    fn new(threshold: f64, score_kind: ScoreKind) -> Self {
        Conventions {
            threshold,
            score_kind,
            boundary: "score >= threshold is positive; logits pass through the sigmoid first",
            empty_sets:
                "per-image 0/0 is 1 when true and predicted sets are both empty, otherwise 0",
            f1: "harmonic mean of mean precision and mean recall",
            ma_exclusion: "attributes without positives or without negatives are excluded from mA",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttributeReport {
    pub name: String,
    pub tpr: f64,
    pub tnr: f64,
    pub acc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub subset: Subset,
    pub images: u64,
    /// `None` when every attribute is excluded.
    #[serde(rename = "mA")]
    pub m_a: Option<f64>,
    pub per_attribute: Vec<AttributeReport>,
    pub excluded: Vec<String>,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub conventions: Conventions,
}

/// Evaluates the predictions of the given records. Every record needs a
/// prediction row.
pub fn evaluate(
    dataset: &Dataset,
    predictions: &PredictionSet,
    records: &[usize],
    subset: Subset,
) -> Result<MetricsReport> {
    let m = dataset.attribute_count();
    let mut labels = Array2::zeros((records.len(), m));
    let mut predicted = Array2::zeros((records.len(), m));
    for (row, &i) in records.iter().enumerate() {
        let record = &dataset.records()[i];
        let scores = predictions.scores_for(&record.image_id).ok_or_else(|| {
            Error::Predictions(format!("no prediction for {:?}", record.image_id))
        })?;
        let bits = binarize_scores(scores, predictions.kind(), predictions.threshold());
        for j in 0..m {
            labels[[row, j]] = record.labels[j];
            predicted[[row, j]] = bits[j];
        }
    }
    let names = dataset.catalog().names();
    let (m_a, per_attribute, excluded) = match mean_accuracy(labels.view(), predicted.view()) {
        Ok(ma) => (
            Some(ma.m_a),
            ma.per_attribute
                .iter()
                .map(|a| AttributeReport {
                    name: names[a.attribute].clone(),
                    tpr: a.tpr,
                    tnr: a.tnr,
                    acc: a.acc,
                })
                .collect(),
            ma.excluded.iter().map(|&j| names[j].clone()).collect(),
        ),
        Err(Error::UndefinedMeanAccuracy) => (None, Vec::new(), names.to_vec()),
        Err(e) => return Err(e),
    };
    let inst = instance_metrics(labels.view(), predicted.view())?;
    Ok(MetricsReport {
        subset,
        images: records.len() as u64,
        m_a,
        per_attribute,
        excluded,
        accuracy: inst.accuracy,
        precision: inst.precision,
        recall: inst.recall,
        f1: inst.f1,
        conventions: Conventions::new(predictions.threshold(), predictions.kind()),
    })
}

/// Evaluates every record that has a prediction row, in dataset order.
pub fn evaluate_covered(dataset: &Dataset, predictions: &PredictionSet) -> Result<MetricsReport> {
    let records: Vec<usize> = dataset
        .records()
        .iter()
        .enumerate()
        .filter(|(_, r)| predictions.scores_for(&r.image_id).is_some())
        .map(|(i, _)| i)
        .collect();
    evaluate(dataset, predictions, &records, Subset::All)
}

/// Report for a subset that may turn out empty.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum SubsetReport {
    Evaluated(MetricsReport),
    Empty {
        subset: Subset,
        images: u64,
        empty: bool,
    },
}

impl SubsetReport {
    pub fn report(&self) -> Option<&MetricsReport> {
        match self {
            SubsetReport::Evaluated(r) => Some(r),
            SubsetReport::Empty { .. } => None,
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, SubsetReport::Empty { .. })
    }

    pub fn images(&self) -> u64 {
        match self {
            SubsetReport::Evaluated(r) => r.images,
            SubsetReport::Empty { images, .. } => *images,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionedReport {
    pub all: MetricsReport,
    pub common_identity: SubsetReport,
    pub unique_identity: SubsetReport,
}

fn subset_report(
    dataset: &Dataset,
    predictions: &PredictionSet,
    records: &[usize],
    subset: Subset,
) -> Result<SubsetReport> {
    if records.is_empty() {
        Ok(SubsetReport::Empty {
            subset,
            images: 0,
            empty: true,
        })
    } else {
        evaluate(dataset, predictions, records, subset).map(SubsetReport::Evaluated)
    }
}

/// Evaluates the test partition as a whole and split by whether each test
/// image's identity also appears in train. Unannotated test images count
/// as unique-identity.
pub fn partitioned_eval(
    dataset: &Dataset,
    assignment: &SplitAssignment,
    predictions: &PredictionSet,
) -> Result<PartitionedReport> {
    assignment.check_covers(dataset)?;
    let train_ids: HashSet<&str> = assignment
        .members(Partition::Train)
        .filter_map(|i| dataset.records()[i].identity.as_deref())
        .collect();
    let test: Vec<usize> = assignment.members(Partition::Test).collect();
    if test.is_empty() {
        return Err(Error::DegenerateSplit("test"));
    }
    let (common, unique): (Vec<usize>, Vec<usize>) = test.iter().partition(|&&i| {
        dataset.records()[i]
            .identity
            .as_deref()
            .is_some_and(|id| train_ids.contains(id))
    });
    Ok(PartitionedReport {
        all: evaluate(dataset, predictions, &test, Subset::All)?,
        common_identity: subset_report(dataset, predictions, &common, Subset::CommonIdentity)?,
        unique_identity: subset_report(dataset, predictions, &unique, Subset::UniqueIdentity)?,
    })
}
