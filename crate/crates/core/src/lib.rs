//! Identity-disjoint ("zero-shot") dataset splits for attribute-annotated
//! pedestrian images, identity-leakage audits, and the evaluation metrics
//! and imbalance-weighted loss used to score attribute recognizers.
//!
//! The main entry points:
//! - [`split::build_zero_shot_split`] searches a train/valid/test split whose
//!   identity sets are pairwise disjoint and whose identity counts, image
//!   counts and attribute ratios stay within the configured thresholds;
//!   [`split::criteria_evaluate`] checks any split against the same rules.
//! - [`audit::overlap_report`] measures how many test images share an
//!   identity with the training set.
//! - [`metrics`] computes mA and instance accuracy/precision/recall/F1, also
//!   broken down by common versus unique test identities.
//! - [`loss`] has the weighted binary cross-entropy and its gradient.
//! - [`synth::generate`] builds seeded synthetic datasets for experiments.
//! - [`cli::run`] exposes everything as the `zsplit` command.

pub mod audit;
pub mod cli;
pub mod error;
pub mod io;
pub mod loss;
pub mod metrics;
pub mod model;
pub mod split;
pub mod synth;

pub use error::{Error, Result};
pub use model::{
    validate_dataset, AttributeCatalog, Dataset, Partition, Record, SplitAssignment, SplitConfig,
    SplitReport, Validation, Violation,
};
