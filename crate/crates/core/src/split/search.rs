use rand::seq::SliceRandom;
use rand::Rng;

use super::criteria::{objective_of, Tally, ViolationObjective};
use super::IdentityGroup;
use crate::error::{Error, Result};
use crate::model::{Dataset, Partition, SplitAssignment, SplitConfig};

/// Group-level view of a dataset: image and positive counts per group.
pub(crate) struct GroupTable<'a> {
    pub groups: &'a [IdentityGroup],
    images: Vec<u64>,
    /// `positives[g * m + j]`.
    positives: Vec<u32>,
    m: usize,
    records: usize,
}

impl<'a> GroupTable<'a> {
    pub fn new(dataset: &Dataset, groups: &'a [IdentityGroup]) -> Self {
        let m = dataset.attribute_count();
        let mut images = Vec::with_capacity(groups.len());
        let mut positives = vec![0u32; groups.len() * m];
        for (g, group) in groups.iter().enumerate() {
            images.push(group.members.len() as u64);
            for &i in &group.members {
                for (j, &label) in dataset.records()[i].labels.iter().enumerate() {
                    positives[g * m + j] += u32::from(label);
                }
            }
        }
        GroupTable {
            groups,
            images,
            positives,
            m,
            records: dataset.len(),
        }
    }

    fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn tally(&self, part: &[usize]) -> Tally {
        let mut tally = Tally::new(self.m);
        for (g, &p) in part.iter().enumerate() {
            self.add(&mut tally, g, p);
        }
        tally
    }

    fn add(&self, tally: &mut Tally, g: usize, p: usize) {
        tally.groups[p] += 1;
        tally.images[p] += self.images[g];
        let src = &self.positives[g * self.m..(g + 1) * self.m];
        for (dst, &v) in tally.positives[p * self.m..(p + 1) * self.m]
            .iter_mut()
            .zip(src)
        {
            *dst += u64::from(v);
        }
    }

    fn remove(&self, tally: &mut Tally, g: usize, p: usize) {
        tally.groups[p] -= 1;
        tally.images[p] -= self.images[g];
        let src = &self.positives[g * self.m..(g + 1) * self.m];
        for (dst, &v) in tally.positives[p * self.m..(p + 1) * self.m]
            .iter_mut()
            .zip(src)
        {
            *dst -= u64::from(v);
        }
    }

    pub fn to_assignment(&self, part: &[usize]) -> SplitAssignment {
        let mut out = vec![Partition::Train; self.records];
        for (group, &p) in self.groups.iter().zip(part) {
            for &i in &group.members {
                out[i] = Partition::ALL[p];
            }
        }
        SplitAssignment::new(out)
    }

    /// Partition of each group, or an error if some group straddles two.
    pub fn parts_of(&self, assignment: &SplitAssignment) -> Result<Vec<usize>> {
        self.groups
            .iter()
            .map(|group| {
                let first = assignment.partition_of(group.members[0]);
                if group
                    .members
                    .iter()
                    .any(|&i| assignment.partition_of(i) != first)
                {
                    Err(Error::Domain(format!(
                        "assignment splits identity group {} across partitions",
                        group.key
                    )))
                } else {
                    Ok(first.index())
                }
            })
            .collect()
    }
}

/// Group counts per partition by largest remainder, at least one each.
fn target_group_counts(total: usize, config: &SplitConfig) -> [usize; 3] {
    let props = config.target_proportions();
    let exact = props.map(|p| p * total as f64);
    let mut counts = exact.map(|e| e.floor() as usize);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let mut left = total - counts.iter().sum::<usize>();
    for &k in order.iter().cycle() {
        if left == 0 {
            break;
        }
        counts[k] += 1;
        left -= 1;
    }
    for k in 0..3 {
        while counts[k] == 0 {
            let donor = (0..3)
                .max_by_key(|&d| (counts[d], std::cmp::Reverse(d)))
                .unwrap();
            counts[donor] -= 1;
            counts[k] += 1;
        }
    }
    counts
}

pub(crate) fn initial_parts<R: Rng + ?Sized>(
    group_count: usize,
    config: &SplitConfig,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if group_count < 3 {
        return Err(Error::Infeasible {
            reason: format!("{group_count} identity group(s); at least 3 are needed"),
            best_report: None,
            best_objective: None,
        });
    }
    let counts = target_group_counts(group_count, config);
    let mut order: Vec<usize> = (0..group_count).collect();
    order.shuffle(rng);
    let mut part = vec![0usize; group_count];
    let mut cursor = 0;
    for (p, &n) in counts.iter().enumerate() {
        for &g in &order[cursor..cursor + n] {
            part[g] = p;
        }
        cursor += n;
    }
    Ok(part)
}

/// Shuffles identity groups and deals them out whole so identity counts
/// follow the target ratio.
pub fn initial_assignment<R: Rng + ?Sized>(
    dataset: &Dataset,
    groups: &[IdentityGroup],
    config: &SplitConfig,
    rng: &mut R,
) -> Result<SplitAssignment> {
    let table = GroupTable::new(dataset, groups);
    let part = initial_parts(groups.len(), config, rng)?;
    Ok(table.to_assignment(&part))
}

/// Result of a local-search run.
#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub assignment: SplitAssignment,
    pub objective: ViolationObjective,
    /// Objective total at the start and after every accepted proposal.
    pub accepted_totals: Vec<f64>,
    pub proposals: u64,
}

pub(crate) struct GroupSearch {
    pub part: Vec<usize>,
    pub objective: ViolationObjective,
    pub accepted_totals: Vec<f64>,
    pub proposals: u64,
}

/// Strict-descent local search over whole groups: relocations of one group
/// and swaps of two groups between partitions. A proposal that would leave
/// a partition without groups is never made.
pub(crate) fn search_parts<R: Rng + ?Sized>(
    table: &GroupTable<'_>,
    mut part: Vec<usize>,
    config: &SplitConfig,
    rng: &mut R,
) -> GroupSearch {
    let mut tally = table.tally(&part);
    let mut current = objective_of(&tally, config);
    let mut accepted_totals = vec![current.total];
    let n = table.len();
    let mut proposals = 0;

    while proposals < config.max_moves && !current.is_satisfied() {
        proposals += 1;
        if rng.random_bool(0.5) {
            let g = rng.random_range(0..n);
            let from = part[g];
            if tally.groups[from] == 1 {
                continue;
            }
            let to = (from + rng.random_range(1..3)) % 3;
            table.remove(&mut tally, g, from);
            table.add(&mut tally, g, to);
            let candidate = objective_of(&tally, config);
            if candidate.total < current.total {
                part[g] = to;
                current = candidate;
                accepted_totals.push(current.total);
            } else {
                table.remove(&mut tally, g, to);
                table.add(&mut tally, g, from);
            }
        } else {
            let a = rng.random_range(0..n);
            let b = rng.random_range(0..n);
            let (pa, pb) = (part[a], part[b]);
            if pa == pb {
                continue;
            }
            table.remove(&mut tally, a, pa);
            table.remove(&mut tally, b, pb);
            table.add(&mut tally, a, pb);
            table.add(&mut tally, b, pa);
            let candidate = objective_of(&tally, config);
            if candidate.total < current.total {
                part[a] = pb;
                part[b] = pa;
                current = candidate;
                accepted_totals.push(current.total);
            } else {
                table.remove(&mut tally, a, pb);
                table.remove(&mut tally, b, pa);
                table.add(&mut tally, a, pa);
                table.add(&mut tally, b, pb);
            }
        }
    }
    GroupSearch {
        part,
        objective: current,
        accepted_totals,
        proposals,
    }
}

/// Improves `assignment` by relocating and swapping whole identity groups,
/// accepting only strict decreases of the violation objective. Stops once
/// the objective reaches zero or after `config.max_moves` proposals.
pub fn local_search<R: Rng + ?Sized>(
    dataset: &Dataset,
    assignment: &SplitAssignment,
    config: &SplitConfig,
    rng: &mut R,
) -> Result<SearchOutcome> {
    assignment.check_covers(dataset)?;
    let groups = super::identity_groups(dataset);
    let table = GroupTable::new(dataset, &groups);
    let part = table.parts_of(assignment)?;
    let run = search_parts(&table, part, config, rng);
    Ok(SearchOutcome {
        assignment: table.to_assignment(&run.part),
        objective: run.objective,
        accepted_totals: run.accepted_totals,
        proposals: run.proposals,
    })
}
