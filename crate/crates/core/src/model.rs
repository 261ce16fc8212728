//! In-memory representation of annotated datasets, split assignments,
//! split configuration and the criteria report.
//!
//! Every type here is immutable once built; the constructors that can fail
//! validate their invariants up front.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered, duplicate-free list of attribute names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AttributeCatalog {
    names: Vec<String>,
}

impl AttributeCatalog {
    pub fn new<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let catalog = AttributeCatalog {
            names: names.into_iter().map(Into::into).collect(),
        };
        let problems = catalog.violations();
        if problems.is_empty() {
            Ok(catalog)
        } else {
            Err(Error::InvalidDataset(problems))
        }
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Number of attributes (M).
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.names.is_empty() {
            out.push(Violation::EmptyCatalog);
        }
        let mut seen = HashSet::new();
        for (index, name) in self.names.iter().enumerate() {
            if name.is_empty() {
                out.push(Violation::EmptyAttributeName { index });
            } else if !seen.insert(name.as_str()) {
                out.push(Violation::DuplicateAttribute { name: name.clone() });
            }
        }
        out
    }
}

/// One annotated image.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Record {
    pub image_id: String,
    /// `None` when the image carries no identity annotation.
    pub identity: Option<String>,
    pub labels: Vec<u8>,
}

impl Record {
    pub fn new(image_id: impl Into<String>, identity: Option<&str>, labels: Vec<u8>) -> Self {
        Record {
            image_id: image_id.into(),
            identity: identity.map(str::to_owned),
            labels,
        }
    }

    pub fn is_positive(&self, attribute: usize) -> bool {
        self.labels[attribute] == 1
    }
}

/// A single broken invariant found by [`validate_dataset`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    EmptyCatalog,
    EmptyAttributeName {
        index: usize,
    },
    DuplicateAttribute {
        name: String,
    },
    EmptyDataset,
    EmptyImageId {
        record: usize,
    },
    DuplicateId {
        image_id: String,
    },
    LabelArity {
        image_id: String,
        expected: usize,
        actual: usize,
    },
    NonBinaryLabel {
        image_id: String,
        attribute: usize,
        value: u8,
    },
    EmptyIdentity {
        image_id: String,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyCatalog => write!(f, "attribute catalog is empty"),
            Violation::EmptyAttributeName { index } => {
                write!(f, "attribute #{index} has an empty name")
            }
            Violation::DuplicateAttribute { name } => write!(f, "duplicate attribute {name:?}"),
            Violation::EmptyDataset => write!(f, "dataset has no records"),
            Violation::EmptyImageId { record } => {
                write!(f, "record #{record} has an empty image id")
            }
            Violation::DuplicateId { image_id } => write!(f, "duplicate id {image_id:?}"),
            Violation::LabelArity {
                image_id,
                expected,
                actual,
            } => write!(
                f,
                "label arity: {image_id:?} has {actual} labels, catalog has {expected}"
            ),
            Violation::NonBinaryLabel {
                image_id,
                attribute,
                value,
            } => write!(
                f,
                "non-binary label {value} for attribute #{attribute} of {image_id:?}"
            ),
            Violation::EmptyIdentity { image_id } => {
                write!(f, "{image_id:?} has an empty identity string")
            }
        }
    }
}

/// Outcome of [`validate_dataset`]: violations are data, not failures.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Validation {
    pub ok: bool,
    pub violations: Vec<Violation>,
}

/// Attribute catalog plus records, in file order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    catalog: AttributeCatalog,
    records: Vec<Record>,
}

impl Dataset {
    /// Builds a dataset and rejects it unless every invariant holds.
    pub fn new(catalog: AttributeCatalog, records: Vec<Record>) -> Result<Self> {
        let dataset = Dataset::from_parts(catalog, records);
        let validation = validate_dataset(&dataset);
        if validation.ok {
            Ok(dataset)
        } else {
            Err(Error::InvalidDataset(validation.violations))
        }
    }

    /// Builds a dataset without checking invariants, for callers that want
    /// to run [`validate_dataset`] themselves and report every violation.
    pub fn from_parts(catalog: AttributeCatalog, records: Vec<Record>) -> Self {
        Dataset { catalog, records }
    }

    pub fn catalog(&self) -> &AttributeCatalog {
        &self.catalog
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    /// Number of records (N).
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn attribute_count(&self) -> usize {
        self.catalog.len()
    }

    pub fn has_missing_identity(&self) -> bool {
        self.records.iter().any(|r| r.identity.is_none())
    }

    pub fn index_by_id(&self) -> std::collections::HashMap<&str, usize> {
        self.records
            .iter()
            .enumerate()
            .map(|(i, r)| (r.image_id.as_str(), i))
            .collect()
    }
}

/// Checks every catalog and record invariant and itemizes each violation.
pub fn validate_dataset(dataset: &Dataset) -> Validation {
    let mut violations = dataset.catalog.violations();
    let m = dataset.catalog.len();
    if dataset.records.is_empty() {
        violations.push(Violation::EmptyDataset);
    }
    let mut seen = HashSet::new();
    for (index, record) in dataset.records.iter().enumerate() {
        if record.image_id.is_empty() {
            violations.push(Violation::EmptyImageId { record: index });
        } else if !seen.insert(record.image_id.as_str()) {
            violations.push(Violation::DuplicateId {
                image_id: record.image_id.clone(),
            });
        }
        if record.identity.as_deref() == Some("") {
            violations.push(Violation::EmptyIdentity {
                image_id: record.image_id.clone(),
            });
        }
        if record.labels.len() != m {
            violations.push(Violation::LabelArity {
                image_id: record.image_id.clone(),
                expected: m,
                actual: record.labels.len(),
            });
        }
        for (attribute, &value) in record.labels.iter().enumerate() {
            if value > 1 {
                violations.push(Violation::NonBinaryLabel {
                    image_id: record.image_id.clone(),
                    attribute,
                    value,
                });
            }
        }
    }
    Validation {
        ok: violations.is_empty(),
        violations,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Partition {
    Train,
    Valid,
    Test,
}

impl Partition {
    pub const ALL: [Partition; 3] = [Partition::Train, Partition::Valid, Partition::Test];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Partition::Train => "train",
            Partition::Valid => "valid",
            Partition::Test => "test",
        }
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Partition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Partition::Train),
            "valid" | "val" => Ok(Partition::Valid),
            "test" => Ok(Partition::Test),
            other => Err(Error::Domain(format!("unknown partition {other:?}"))),
        }
    }
}

/// Partition membership of every record, indexed like `Dataset::records`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SplitAssignment {
    partition_of: Vec<Partition>,
}

impl SplitAssignment {
    pub fn new(partition_of: Vec<Partition>) -> Self {
        SplitAssignment { partition_of }
    }

    pub fn len(&self) -> usize {
        self.partition_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.partition_of.is_empty()
    }

    pub fn partition_of(&self, record: usize) -> Partition {
        self.partition_of[record]
    }

    pub fn as_slice(&self) -> &[Partition] {
        &self.partition_of
    }

    /// Record indices belonging to `partition`, in dataset order.
    pub fn members(&self, partition: Partition) -> impl Iterator<Item = usize> + '_ {
        self.partition_of
            .iter()
            .enumerate()
            .filter(move |(_, p)| **p == partition)
            .map(|(i, _)| i)
    }

    pub fn count(&self, partition: Partition) -> usize {
        self.partition_of
            .iter()
            .filter(|p| **p == partition)
            .count()
    }

    pub fn first_empty_partition(&self) -> Option<Partition> {
        Partition::ALL.into_iter().find(|p| self.count(*p) == 0)
    }

    pub(crate) fn check_covers(&self, dataset: &Dataset) -> Result<()> {
        if self.len() != dataset.len() {
            return Err(Error::shape(
                format!("assignment over {} records", dataset.len()),
                format!("{} entries", self.len()),
            ));
        }
        Ok(())
    }
}

/// Weights of the per-criterion terms in the search objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveWeights {
    pub identity_ratio: f64,
    pub identity_balance: f64,
    pub image_balance: f64,
    pub attribute_balance: f64,
}

impl Default for ObjectiveWeights {
    fn default() -> Self {
        ObjectiveWeights {
            identity_ratio: 1.0,
            identity_balance: 1.0,
            image_balance: 1.0,
            attribute_balance: 1.0,
        }
    }
}

/// Thresholds and search budget for building and checking a split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitConfig {
    /// Identity-balance threshold, as a fraction of all identities.
    pub t_id: f64,
    /// Image-balance threshold, in images.
    pub t_img: u64,
    /// Threshold on the per-attribute positive-ratio gap.
    pub t_attr: f64,
    /// Target identity proportions for train, valid, test.
    pub ratio_targets: [f64; 3],
    /// Relative tolerance on each identity proportion.
    pub ratio_tolerance: f64,
    /// Also require the attribute gap to hold between train and test.
    pub c5_train_pair: bool,
    pub seed: u64,
    pub max_restarts: u32,
    pub max_moves: u64,
    pub weights: ObjectiveWeights,
    /// Worker cap for parallel restarts; never affects results.
    #[serde(skip)]
    pub threads: Option<usize>,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            t_id: 0.01,
            t_img: 300,
            t_attr: 0.03,
            ratio_targets: [3.0, 1.0, 1.0],
            ratio_tolerance: 0.10,
            c5_train_pair: false,
            seed: 0,
            max_restarts: 20,
            max_moves: 50_000,
            weights: ObjectiveWeights::default(),
            threads: None,
        }
    }
}

impl SplitConfig {
    pub fn validate(&self) -> Result<()> {
        let open_unit = |v: f64| v > 0.0 && v < 1.0;
        if !open_unit(self.t_id) {
            return Err(Error::Domain(format!(
                "t_id must lie in (0,1), got {}",
                self.t_id
            )));
        }
        if !(self.t_attr > 0.0 && self.t_attr <= 1.0) {
            return Err(Error::Domain(format!(
                "t_attr must lie in (0,1], got {}",
                self.t_attr
            )));
        }
        if self
            .ratio_targets
            .iter()
            .any(|r| !r.is_finite() || *r <= 0.0)
        {
            return Err(Error::Domain(format!(
                "ratio targets must be strictly positive, got {:?}",
                self.ratio_targets
            )));
        }
        if !self.ratio_tolerance.is_finite() || self.ratio_tolerance <= 0.0 {
            return Err(Error::Domain(format!(
                "ratio tolerance must be positive, got {}",
                self.ratio_tolerance
            )));
        }
        let w = &self.weights;
        let weights = [
            w.identity_ratio,
            w.identity_balance,
            w.image_balance,
            w.attribute_balance,
        ];
        if weights.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(Error::Domain(format!(
                "objective weights must be positive, got {weights:?}"
            )));
        }
        Ok(())
    }

    /// Target proportions normalized to sum to one.
    pub fn target_proportions(&self) -> [f64; 3] {
        let sum: f64 = self.ratio_targets.iter().sum();
        self.ratio_targets.map(|r| r / sum)
    }
}

/// A count per partition.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionCounts {
    pub train: u64,
    pub valid: u64,
    pub test: u64,
}

impl PartitionCounts {
    pub fn from_array(a: [u64; 3]) -> Self {
        PartitionCounts {
            train: a[0],
            valid: a[1],
            test: a[2],
        }
    }

    pub fn get(&self, partition: Partition) -> u64 {
        match partition {
            Partition::Train => self.train,
            Partition::Valid => self.valid,
            Partition::Test => self.test,
        }
    }

    pub fn total(&self) -> u64 {
        self.train + self.valid + self.test
    }
}

/// Identity proportions close to the target ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityRatioCheck {
    /// Identity groups per partition; each unannotated image counts as its own.
    pub identities: PartitionCounts,
    /// Annotated identities only.
    pub labeled_identities: PartitionCounts,
    pub proportions: [f64; 3],
    pub targets: [f64; 3],
    pub max_relative_deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Identities shared between each pair of partitions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisjointnessCheck {
    pub train_valid: u64,
    pub train_test: u64,
    pub valid_test: u64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityBalanceCheck {
    pub valid: u64,
    pub test: u64,
    pub difference: u64,
    pub all_identities: u64,
    /// `all_identities * t_id`; the difference must be strictly below it.
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageBalanceCheck {
    pub images: PartitionCounts,
    pub difference: u64,
    pub threshold: u64,
    pub pass: bool,
}

/// Worst per-attribute positive-ratio gap between two partitions.
/// `max_gap` is `None` when either partition is empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioGap {
    pub max_gap: Option<f64>,
    pub attribute: Option<String>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeBalanceCheck {
    pub valid_test: RatioGap,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_test: Option<RatioGap>,
    pub threshold: f64,
    pub pass: bool,
}

/// Measured values and verdicts for the five split criteria.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitReport {
    pub c1_identity_ratio: IdentityRatioCheck,
    pub c2_disjoint: DisjointnessCheck,
    pub c3_identity_balance: IdentityBalanceCheck,
    pub c4_image_balance: ImageBalanceCheck,
    pub c5_attribute_balance: AttributeBalanceCheck,
    pub pass: bool,
}

impl SplitReport {
    pub fn verdicts(&self) -> [bool; 5] {
        [
            self.c1_identity_ratio.pass,
            self.c2_disjoint.pass,
            self.c3_identity_balance.pass,
            self.c4_image_balance.pass,
            self.c5_attribute_balance.pass,
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn catalog() -> AttributeCatalog {
        AttributeCatalog::new(["Hat", "Male"]).unwrap()
    }

    #[test]
    fn valid_dataset_is_ok() {
        let ds = Dataset::from_parts(
            catalog(),
            vec![
                Record::new("a", Some("p1"), vec![1, 0]),
                Record::new("b", None, vec![0, 1]),
            ],
        );
        let v = validate_dataset(&ds);
        assert!(v.ok, "{:?}", v.violations);
    }

    #[test]
    fn label_arity_is_reported() {
        let ds = Dataset::from_parts(catalog(), vec![Record::new("a", None, vec![1, 0, 1])]);
        let v = validate_dataset(&ds);
        assert!(!v.ok);
        assert!(matches!(
            v.violations[0],
            Violation::LabelArity { actual: 3, .. }
        ));
        assert!(v.violations[0].to_string().starts_with("label arity"));
    }

    #[test]
    fn duplicate_id_is_reported() {
        let ds = Dataset::from_parts(
            catalog(),
            vec![
                Record::new("a", None, vec![1, 0]),
                Record::new("a", None, vec![0, 0]),
            ],
        );
        let v = validate_dataset(&ds);
        assert_eq!(
            v.violations,
            vec![Violation::DuplicateId {
                image_id: "a".into()
            }]
        );
        assert!(v.violations[0].to_string().starts_with("duplicate id"));
    }

    #[test]
    fn every_violation_is_itemized() {
        let ds = Dataset::from_parts(
            catalog(),
            vec![
                Record::new("a", Some(""), vec![2, 0]),
                Record::new("a", None, vec![0]),
            ],
        );
        let v = validate_dataset(&ds);
        assert_eq!(v.violations.len(), 4);
        assert!(Dataset::new(ds.catalog().clone(), ds.records().to_vec()).is_err());
    }

    #[test]
    fn catalog_rejects_duplicates_and_blanks() {
        assert!(AttributeCatalog::new(["a", "a"]).is_err());
        assert!(AttributeCatalog::new(["a", ""]).is_err());
        assert!(AttributeCatalog::new(Vec::<String>::new()).is_err());
    }

    #[test]
    fn config_defaults_and_bounds() {
        let cfg = SplitConfig::default();
        assert!(cfg.validate().is_ok());
        assert_eq!((cfg.t_id, cfg.t_img, cfg.t_attr), (0.01, 300, 0.03));
        let bad = SplitConfig {
            t_attr: 1.5,
            ..SplitConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = SplitConfig {
            ratio_targets: [3.0, 0.0, 1.0],
            ..SplitConfig::default()
        };
        assert!(bad.validate().is_err());
        let p = cfg.target_proportions();
        assert!((p[0] - 0.6).abs() < 1e-15 && (p[1] - 0.2).abs() < 1e-15);
    }
}
