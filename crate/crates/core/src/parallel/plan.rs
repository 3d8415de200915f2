//! Round planning: how many levels a round covers, which workers take part
//! and which columns each of them owns.

use std::ops::Range;

/// Column range `[start, end)` a worker owns at the base level of a round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Assignment {
    pub start: usize,
    pub end: usize,
}

impl Assignment {
    pub fn width(&self) -> usize {
        self.end - self.start
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundPlan {
    /// Level whose values are already available.
    pub base_level: usize,
    /// Nodes at the base level, `base_level + 1`.
    pub n_nodes: usize,
    pub p_active: usize,
    /// Levels computed in this round, `base_level - 1` down to `base_level - depth`.
    pub depth: usize,
    pub assignments: Vec<Assignment>,
    /// Level at which a worker tells its left neighbour that region B may start.
    pub trigger_level: usize,
    /// Buffer row holding the base level.
    pub buffer_base: usize,
    /// `L`, the cap on `depth`; the buffer has `block_levels + 1` rows.
    pub block_levels: usize,
}

/// Largest worker count not above `requested` that leaves each worker at
/// least two of `n_nodes` columns.
pub fn active_workers(n_nodes: usize, requested: usize) -> usize {
    let mut p = requested.max(1);
    while n_nodes < 2 * p && p > 1 {
        p -= 1;
    }
    p
}

/// Even split of `n_nodes` columns; the last worker takes the remainder.
pub fn split_columns(n_nodes: usize, p_active: usize) -> Vec<Assignment> {
    let w = n_nodes / p_active;
    (0..p_active)
        .map(|i| Assignment {
            start: i * w,
            end: if i + 1 == p_active { n_nodes } else { (i + 1) * w },
        })
        .collect()
}

/// Plans the round starting from `base_level` with the buffer base at row 0.
pub fn plan_round(base_level: usize, p_requested: usize, block_levels: usize) -> RoundPlan {
    plan_round_at(base_level, p_requested, block_levels, 0)
}

pub fn plan_round_at(base_level: usize, p_requested: usize, block_levels: usize, buffer_base: usize) -> RoundPlan {
    assert!(base_level >= 1, "no round starts at the root");
    assert!(block_levels >= 1, "block_levels must be at least 1");
    let n_nodes = base_level + 1;
    let p_active = active_workers(n_nodes, p_requested);
    let depth = block_levels.min(n_nodes / p_active - 1);
    let trigger_level = if depth > 1 {
        base_level - depth + 1
    } else {
        base_level - depth
    };
    RoundPlan {
        base_level,
        n_nodes,
        p_active,
        depth,
        assignments: split_columns(n_nodes, p_active),
        trigger_level,
        buffer_base: buffer_base % (block_levels + 1),
        block_levels,
    }
}

impl RoundPlan {
    pub fn is_last_worker(&self, worker: usize) -> bool {
        worker + 1 == self.p_active
    }

    /// Region A columns of `worker` at `level`: a staircase narrowing by one
    /// column per level from the right edge of the assignment.
    pub fn region_a(&self, worker: usize, level: usize) -> Range<usize> {
        let a = self.assignments[worker];
        let offset = self.base_level - level;
        a.start..(a.end - offset).min(level + 1)
    }

    /// Region B columns of `worker` at `level`; empty for the last worker.
    pub fn region_b(&self, worker: usize, level: usize) -> Range<usize> {
        let a = self.assignments[worker];
        let end = a.end.min(level + 1);
        (self.region_a(worker, level).end).min(end)..end
    }

    /// Levels computed in this round, in processing order.
    pub fn levels(&self) -> impl Iterator<Item = usize> {
        let b = self.base_level;
        (b - self.depth..b).rev()
    }

    pub fn row_of(&self, level: usize) -> usize {
        (self.buffer_base + (self.base_level - level)) % (self.block_levels + 1)
    }

    pub fn region_sizes(&self, worker: usize) -> (usize, usize) {
        if worker >= self.p_active {
            return (0, 0);
        }
        self.levels().fold((0, 0), |(a, b), c| {
            (a + self.region_a(worker, c).len(), b + self.region_b(worker, c).len())
        })
    }

    pub fn next_base_level(&self) -> usize {
        self.base_level - self.depth
    }

    pub fn next_buffer_base(&self) -> usize {
        (self.buffer_base + self.depth) % (self.block_levels + 1)
    }
}

/// The rounds of a whole backward induction from `leaf_level` to the root.
#[derive(Debug, Clone)]
pub struct Schedule {
    next: Option<(usize, usize, usize)>,
    block_levels: usize,
}

impl Schedule {
    pub fn new(leaf_level: usize, p_requested: usize, block_levels: usize) -> Self {
        Schedule {
            next: (leaf_level > 0).then_some((leaf_level, p_requested.max(1), 0)),
            block_levels,
        }
    }

    /// Column split of the leaf level, done before the first round.
    pub fn leaf_assignments(leaf_level: usize, p_requested: usize) -> Vec<Assignment> {
        let n = leaf_level + 1;
        split_columns(n, active_workers(n, p_requested))
    }
}

impl Iterator for Schedule {
    type Item = RoundPlan;

    fn next(&mut self) -> Option<RoundPlan> {
        let (base, p, u) = self.next?;
        let plan = plan_round_at(base, p, self.block_levels, u);
        let b = plan.next_base_level();
        self.next = (b > 0).then_some((b, plan.p_active, plan.next_buffer_base()));
        Some(plan)
    }
}

/// Nodes `worker` computes over the whole lattice, leaf initialisation included.
pub fn count_worker_nodes(leaf_level: usize, p: usize, block_levels: usize, worker: usize) -> u64 {
    let leaves = Schedule::leaf_assignments(leaf_level, p)
        .get(worker)
        .map_or(0, Assignment::width) as u64;
    Schedule::new(leaf_level, p, block_levels).fold(leaves, |acc, plan| {
        let (a, b) = plan.region_sizes(worker);
        acc + (a + b) as u64
    })
}

/// Nodes worker 0 computes on the transaction-cost lattice of `steps` steps.
pub fn count_p0_nodes(steps: usize, p: usize, block_levels: usize) -> u64 {
    count_worker_nodes(steps + 1, p, block_levels, 0)
}

/// `N^2 / 2p`, the asymptotic share of worker 0.
pub fn estimate_p0_nodes(steps: usize, p: usize) -> f64 {
    let n = steps as f64;
    n * n / (2.0 * p as f64)
}
