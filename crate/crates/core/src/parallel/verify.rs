//! Dry run of the schedule that checks coverage, ordering and buffer use
//! without pricing anything.

use thiserror::Error;

use super::plan::{RoundPlan, Schedule};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScheduleViolation {
    #[error("node ({t}, {l}) is never computed")]
    Uncovered { t: usize, l: usize },
    #[error("node ({t}, {l}) is computed more than once")]
    Duplicate { t: usize, l: usize },
    #[error("worker {worker} computes ({t}, {l}) before child ({ct}, {cl}) is visible")]
    NotReady { worker: usize, t: usize, l: usize, ct: usize, cl: usize },
    #[error("round at base level {base}: buffer row {row} holds two levels")]
    RowClash { base: usize, row: usize },
    #[error("child ({t}, {l}) was overwritten in the buffer before it was read")]
    Stale { t: usize, l: usize },
    #[error("round at base level {base}: bad shape ({reason})")]
    Shape { base: usize, reason: &'static str },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DryRun {
    pub rounds: usize,
    pub nodes: u64,
    /// Nodes per worker, leaf initialisation included.
    pub per_worker: Vec<u64>,
}

#[derive(Debug, Clone, Copy)]
struct Stamp {
    round: usize,
    worker: usize,
    seq: usize,
}

/// A worker's nodes in one round, in execution order, with the position
/// after which its signal is raised and where region B begins.
struct Trace {
    nodes: Vec<(usize, usize)>,
    signal_at: Option<usize>,
    region_b_from: usize,
}

fn trace(plan: &RoundPlan, worker: usize, leaves: &[(usize, usize)]) -> Trace {
    let mut nodes = leaves.to_vec();
    let mut signal_at = None;
    let start = plan.assignments[worker].start;
    for t in plan.levels() {
        for l in plan.region_a(worker, t) {
            nodes.push((t, l));
            if worker > 0 && t == plan.trigger_level && l == start {
                signal_at = Some(nodes.len() - 1);
            }
        }
    }
    let region_b_from = nodes.len();
    for t in plan.levels() {
        nodes.extend(plan.region_b(worker, t).map(|l| (t, l)));
    }
    Trace { nodes, signal_at, region_b_from }
}

fn check_shape(plan: &RoundPlan) -> Result<(), ScheduleViolation> {
    let base = plan.base_level;
    let bad = |reason| Err(ScheduleViolation::Shape { base, reason });
    if plan.depth < 1 || plan.depth > plan.block_levels {
        return bad("depth outside [1, L]");
    }
    if plan.buffer_base > plan.block_levels {
        return bad("buffer base outside [0, L]");
    }
    if plan.assignments.iter().any(|a| a.width() < 2) {
        return bad("worker with fewer than two columns");
    }
    let last = plan.p_active - 1;
    if plan.levels().any(|t| !plan.region_b(last, t).is_empty()) {
        return bad("last worker has region B nodes");
    }
    if plan.p_active >= 2 {
        let (a0, b0) = plan.region_sizes(0);
        let (a1, b1) = plan.region_sizes(plan.p_active - 2);
        if (a0 + b0).abs_diff(a1 + b1) > plan.depth {
            return bad("unbalanced workers");
        }
    }
    let mut rows: Vec<usize> = (plan.next_base_level()..=base).map(|t| plan.row_of(t)).collect();
    rows.sort_unstable();
    if let Some(w) = rows.windows(2).find(|w| w[0] == w[1]) {
        return Err(ScheduleViolation::RowClash { base, row: w[0] });
    }
    Ok(())
}

/// Simulates the whole schedule for a lattice with levels `leaf_level..=0`.
pub fn verify_schedule(leaf_level: usize, threads: usize, block_levels: usize) -> Result<DryRun, ScheduleViolation> {
    let plans: Vec<RoundPlan> = Schedule::new(leaf_level, threads, block_levels).collect();
    check_plans(leaf_level, threads, block_levels, &plans)
}

fn check_plans(
    leaf_level: usize,
    threads: usize,
    block_levels: usize,
    plans: &[RoundPlan],
) -> Result<DryRun, ScheduleViolation> {
    let mut stamps: Vec<Vec<Option<Stamp>>> = (0..=leaf_level).map(|t| vec![None; t + 1]).collect();
    let mut occupant: Vec<Vec<Option<usize>>> = vec![vec![None; leaf_level + 1]; block_levels + 1];
    let mut per_worker = vec![0u64; threads.max(1)];

    let leaf_split = Schedule::leaf_assignments(leaf_level, threads);

    if plans.is_empty() {
        per_worker[0] = 1;
        return Ok(DryRun { rounds: 0, nodes: 1, per_worker });
    }

    for (round, plan) in plans.iter().enumerate() {
        check_shape(plan)?;
        let traces: Vec<Trace> = (0..plan.p_active)
            .map(|w| {
                let leaves: Vec<(usize, usize)> = if round == 0 {
                    leaf_split.get(w).map_or(vec![], |a| (a.start..a.end).map(|l| (leaf_level, l)).collect())
                } else {
                    vec![]
                };
                trace(plan, w, &leaves)
            })
            .collect();

        for (w, tr) in traces.iter().enumerate() {
            for (seq, &(t, l)) in tr.nodes.iter().enumerate() {
                let slot = &mut stamps[t][l];
                if slot.is_some() {
                    return Err(ScheduleViolation::Duplicate { t, l });
                }
                *slot = Some(Stamp { round, worker: w, seq });
                per_worker[w] += 1;
            }
        }

        // Ordering: a child must come from an earlier round, from earlier in
        // the same worker, or from the right neighbour before its signal when
        // the reader is in region B.
        for (w, tr) in traces.iter().enumerate() {
            for (seq, &(t, l)) in tr.nodes.iter().enumerate() {
                if t == leaf_level {
                    continue;
                }
                for cl in [l, l + 1] {
                    let child = stamps[t + 1][cl].ok_or(ScheduleViolation::NotReady { worker: w, t, l, ct: t + 1, cl })?;
                    let visible = child.round < round
                        || (child.worker == w && child.seq < seq)
                        || (child.worker == w + 1
                            && seq >= tr.region_b_from
                            && traces[w + 1].signal_at.is_some_and(|s| child.seq <= s));
                    if !visible {
                        return Err(ScheduleViolation::NotReady { worker: w, t, l, ct: t + 1, cl });
                    }
                }
            }
        }

        // Buffer contents in a sequential replay of the round; rows are
        // distinct within a round, so any interleaving yields the same reads.
        let mut order: Vec<(usize, usize)> = traces.iter().flat_map(|tr| tr.nodes.iter().copied()).collect();
        order.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        for (t, l) in order {
            if t < leaf_level {
                let row = plan.row_of(t + 1);
                for cl in [l, l + 1] {
                    if occupant[row][cl] != Some(t + 1) {
                        return Err(ScheduleViolation::Stale { t: t + 1, l: cl });
                    }
                }
            }
            occupant[plan.row_of(t)][l] = Some(t);
        }
    }

    for (t, row) in stamps.iter().enumerate() {
        if let Some(l) = row.iter().position(Option::is_none) {
            return Err(ScheduleViolation::Uncovered { t, l });
        }
    }
    let nodes = per_worker.iter().sum();
    Ok(DryRun { rounds: plans.len(), nodes, per_worker })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parallel::plan::count_worker_nodes;

    #[test]
    fn small_grid_is_sound() {
        for leaf_level in 0..60 {
            for threads in 1..=9 {
                for block_levels in [1, 2, 3, 5, 8, 50] {
                    let run = verify_schedule(leaf_level, threads, block_levels)
                        .unwrap_or_else(|e| panic!("{leaf_level} {threads} {block_levels}: {e}"));
                    let total = ((leaf_level + 1) * (leaf_level + 2) / 2) as u64;
                    assert_eq!(run.nodes, total);
                    for (w, &n) in run.per_worker.iter().enumerate() {
                        assert_eq!(n, count_worker_nodes(leaf_level, threads, block_levels, w));
                    }
                }
            }
        }
    }

    #[test]
    fn late_signal_is_caught() {
        let mut plans: Vec<RoundPlan> = Schedule::new(11, 3, 3).collect();
        plans[0].trigger_level = 10;
        assert!(matches!(
            check_plans(11, 3, 3, &plans),
            Err(ScheduleViolation::NotReady { .. })
        ));
    }

    #[test]
    fn missing_round_is_caught() {
        let mut plans: Vec<RoundPlan> = Schedule::new(11, 3, 3).collect();
        plans.pop();
        assert!(matches!(check_plans(11, 3, 3, &plans), Err(ScheduleViolation::Uncovered { .. })));
    }

    #[test]
    fn oversized_round_is_caught() {
        let mut plans: Vec<RoundPlan> = Schedule::new(11, 3, 3).collect();
        plans[0].block_levels = 2;
        assert!(matches!(check_plans(11, 3, 2, &plans), Err(ScheduleViolation::Shape { .. })));
    }

    #[test]
    fn published_configurations_are_sound() {
        for n in [1200usize, 1350, 1500] {
            for p in [2, 4, 8] {
                verify_schedule(n + 1, p, 5).unwrap();
            }
        }
    }
}
