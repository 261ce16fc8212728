//! Identity-disjoint split construction and checking.
//!
//! A split is searched over identity groups, never over single images, so
//! no identity can straddle two partitions at any point of the search.
//! Images without an identity annotation each form their own group.

mod criteria;
mod search;

use std::collections::HashMap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

pub use criteria::{criteria_evaluate, objective, ViolationObjective};
pub use search::{initial_assignment, local_search, SearchOutcome};

use crate::error::{Error, Result};
use crate::model::{Dataset, Partition, SplitAssignment, SplitConfig, SplitReport};
use search::{initial_parts, search_parts, GroupTable};

/// Key of an identity group. Unannotated images get a key of their own
/// variant, so they can never merge with an annotated identity.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(tag = "kind", content = "key", rename_all = "lowercase")]
pub enum GroupKey {
    Identity(String),
    /// Singleton group of one unannotated image, keyed by its image id.
    Unlabeled(String),
}

impl fmt::Display for GroupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupKey::Identity(id) => write!(f, "{id:?}"),
            GroupKey::Unlabeled(image) => write!(f, "<unlabeled {image:?}>"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdentityGroup {
    pub key: GroupKey,
    /// Record indices into the dataset, in dataset order.
    pub members: Vec<usize>,
}

impl IdentityGroup {
    pub fn image_ids<'d>(&self, dataset: &'d Dataset) -> Vec<&'d str> {
        self.members
            .iter()
            .map(|&i| dataset.records()[i].image_id.as_str())
            .collect()
    }

    pub fn is_synthetic(&self) -> bool {
        matches!(self.key, GroupKey::Unlabeled(_))
    }
}

/// One group per distinct identity, in order of first appearance, plus a
/// singleton group per unannotated image.
pub fn identity_groups(dataset: &Dataset) -> Vec<IdentityGroup> {
    let mut groups: Vec<IdentityGroup> = Vec::new();
    let mut slot: HashMap<&str, usize> = HashMap::new();
    for (i, record) in dataset.records().iter().enumerate() {
        match &record.identity {
            Some(id) => {
                let g = *slot.entry(id.as_str()).or_insert_with(|| {
                    groups.push(IdentityGroup {
                        key: GroupKey::Identity(id.clone()),
                        members: Vec::new(),
                    });
                    groups.len() - 1
                });
                groups[g].members.push(i);
            }
            None => groups.push(IdentityGroup {
                key: GroupKey::Unlabeled(record.image_id.clone()),
                members: vec![i],
            }),
        }
    }
    groups
}

/// A split that passed every criterion.
#[derive(Debug, Clone)]
pub struct BuiltSplit {
    pub assignment: SplitAssignment,
    pub report: SplitReport,
    /// Index of the restart that produced it.
    pub restart: u32,
    pub proposals: u64,
}

/// RNG of restart `restart`: an independent ChaCha stream under the seed.
pub fn restart_rng(seed: u64, restart: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::from(restart));
    rng
}

struct Attempt {
    part: Vec<usize>,
    objective: ViolationObjective,
    proposals: u64,
}

fn attempt(table: &GroupTable<'_>, config: &SplitConfig, restart: u32) -> Result<Attempt> {
    let mut rng = restart_rng(config.seed, restart);
    let part = initial_parts(table.groups.len(), config, &mut rng)?;
    let run = search_parts(table, part, config, &mut rng);
    Ok(Attempt {
        part: run.part,
        objective: run.objective,
        proposals: run.proposals,
    })
}

/// Builds an identity-disjoint train/valid/test split satisfying every
/// criterion in `config`.
///
/// Restarts run in batches of `config.threads` workers; the lowest-index
/// passing restart wins, so the result depends only on the dataset and
/// config. After `max_restarts` failures the error carries the report of
/// the restart with the smallest objective.
pub fn build_zero_shot_split(dataset: &Dataset, config: &SplitConfig) -> Result<BuiltSplit> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::Domain("dataset has no records".into()));
    }
    let groups = identity_groups(dataset);
    let table = GroupTable::new(dataset, &groups);
    let workers = config.threads.unwrap_or(1).max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Domain(format!("thread pool: {e}")))?;

    let restarts: Vec<u32> = (0..config.max_restarts.max(1)).collect();
    let mut best: Option<(ViolationObjective, Vec<usize>)> = None;
    for batch in restarts.chunks(workers) {
        let results: Vec<Result<Attempt>> = if workers == 1 {
            batch.iter().map(|&r| attempt(&table, config, r)).collect()
        } else {
            pool.install(|| {
                batch
                    .par_iter()
                    .map(|&r| attempt(&table, config, r))
                    .collect()
            })
        };
        for (&restart, result) in batch.iter().zip(results) {
            let run = result?;
            if run.objective.is_satisfied() {
                let assignment = table.to_assignment(&run.part);
                let report = criteria_evaluate(dataset, &assignment, config)?;
                if report.pass {
                    return Ok(BuiltSplit {
                        assignment,
                        report,
                        restart,
                        proposals: run.proposals,
                    });
                }
            }
            if best
                .as_ref()
                .is_none_or(|(b, _)| run.objective.total < b.total)
            {
                best = Some((run.objective, run.part));
            }
        }
    }

    let (objective, part) = best.expect("at least one restart ran");
    let assignment = table.to_assignment(&part);
    let report = criteria_evaluate(dataset, &assignment, config)?;
    Err(Error::Infeasible {
        reason: format!(
            "no restart satisfied every criterion (best objective {:.6})",
            objective.total
        ),
        best_report: Some(Box::new(report)),
        best_objective: Some(objective.total),
    })
}

/// Image-level random split that ignores identities, the way many existing
/// benchmarks were partitioned. Useful as a leakage baseline.
pub fn naive_image_split(
    dataset: &Dataset,
    fractions: [f64; 3],
    seed: u64,
) -> Result<SplitAssignment> {
    if fractions.iter().any(|f| !f.is_finite() || *f < 0.0) || fractions.iter().sum::<f64>() <= 0.0
    {
        return Err(Error::Domain(format!(
            "invalid split fractions {fractions:?}"
        )));
    }
    let sum: f64 = fractions.iter().sum();
    let n = dataset.len();
    let n_train = ((fractions[0] / sum) * n as f64).round() as usize;
    let n_valid = (((fractions[1] / sum) * n as f64).round() as usize).min(n - n_train.min(n));
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut out = vec![Partition::Test; n];
    for (rank, &i) in order.iter().enumerate() {
        if rank < n_train {
            out[i] = Partition::Train;
        } else if rank < n_train + n_valid {
            out[i] = Partition::Valid;
        }
    }
    Ok(SplitAssignment::new(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AttributeCatalog, Record};

    fn dataset(ids: &[Option<&str>]) -> Dataset {
        let records = ids
            .iter()
            .enumerate()
            .map(|(i, id)| Record::new(format!("img{i}"), *id, vec![0]))
            .collect();
        Dataset::new(AttributeCatalog::new(["a"]).unwrap(), records).unwrap()
    }

    #[test]
    fn groups_by_identity() {
        let ds = dataset(&[Some("p1"), Some("p1"), Some("p2")]);
        let g = identity_groups(&ds);
        assert_eq!(g.len(), 2);
        assert_eq!(g[0].key, GroupKey::Identity("p1".into()));
        assert_eq!(g[0].image_ids(&ds), ["img0", "img1"]);
        assert_eq!(g[1].members, [2]);
    }

    #[test]
    fn unlabeled_images_are_singletons() {
        let ds = dataset(&[None, None]);
        let g = identity_groups(&ds);
        assert_eq!(g.len(), 2);
        assert!(g.iter().all(|x| x.is_synthetic() && x.members.len() == 1));
    }

    #[test]
    fn synthetic_keys_cannot_collide_with_identities() {
        // An identity literally named like an image id stays a separate group.
        let records = vec![
            Record::new("x", Some("y"), vec![0]),
            Record::new("y", None, vec![0]),
        ];
        let ds = Dataset::new(AttributeCatalog::new(["a"]).unwrap(), records).unwrap();
        let g = identity_groups(&ds);
        assert_eq!(g.len(), 2);
        assert_ne!(g[0].key, g[1].key);
    }

    #[test]
    fn five_singletons_deal_three_one_one() {
        let ds = dataset(&[Some("a"), Some("b"), Some("c"), Some("d"), Some("e")]);
        let groups = identity_groups(&ds);
        let cfg = SplitConfig::default();
        let asg = initial_assignment(&ds, &groups, &cfg, &mut restart_rng(1, 0)).unwrap();
        assert_eq!(Partition::ALL.map(|p| asg.count(p)), [3, 1, 1]);
        let again = initial_assignment(&ds, &groups, &cfg, &mut restart_rng(1, 0)).unwrap();
        assert_eq!(asg, again);
    }

    #[test]
    fn too_few_groups_is_infeasible() {
        let ds = dataset(&[Some("a"), Some("a"), Some("a")]);
        let groups = identity_groups(&ds);
        let err = initial_assignment(
            &ds,
            &groups,
            &SplitConfig::default(),
            &mut restart_rng(0, 0),
        );
        assert!(matches!(err, Err(Error::Infeasible { .. })));
    }

    #[test]
    fn naive_split_sizes() {
        let ds = dataset(&vec![None; 100]);
        let asg = naive_image_split(&ds, [0.5, 0.1, 0.4], 3).unwrap();
        assert_eq!(Partition::ALL.map(|p| asg.count(p)), [50, 10, 40]);
    }
}
