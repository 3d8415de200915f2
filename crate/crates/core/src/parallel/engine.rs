//! Multi-threaded backward induction over the round schedule.

use std::sync::{Barrier, Mutex};
use std::thread;

use super::buffer::LevelBuffer;
use super::plan::{RoundPlan, Schedule};
use super::signal::SignalBoard;
use crate::seq::NodeKernel;

struct Failure<E> {
    t: usize,
    l: usize,
    error: E,
}

struct Shared<'k, K: NodeKernel> {
    kernel: &'k K,
    threads: usize,
    block_levels: usize,
    buffer: LevelBuffer<K::Value>,
    signals: SignalBoard,
    barrier: Barrier,
    failure: Mutex<Option<Failure<K::Error>>>,
}

impl<K: NodeKernel> Shared<'_, K> {
    /// Keeps the failure the sequential pricer would hit first: highest
    /// level, then lowest column.
    fn record(&self, t: usize, l: usize, error: K::Error) {
        let mut slot = self.failure.lock().unwrap_or_else(|e| e.into_inner());
        let earlier = match &*slot {
            None => true,
            Some(f) => t > f.t || (t == f.t && l < f.l),
        };
        if earlier {
            *slot = Some(Failure { t, l, error });
        }
    }

    fn compute(&self, plan: &RoundPlan, t: usize, l: usize) {
        let child_row = plan.row_of(t + 1);
        // SAFETY: children were written earlier by this worker, by the right
        // neighbour before it raised its signal, or in an earlier round.
        let (up, down) = unsafe { (self.buffer.get(child_row, l), self.buffer.get(child_row, l + 1)) };
        let value = match self.kernel.node(t, l, up, down) {
            Ok(v) => v,
            Err(e) => {
                let stand_in = up.clone();
                self.record(t, l, e);
                stand_in
            }
        };
        // SAFETY: each cell of a round is owned by exactly one worker.
        unsafe { self.buffer.set(plan.row_of(t), l, value) };
    }

    fn worker(&self, i: usize) {
        let leaf_level = self.kernel.leaf_level();
        if let Some(own) = Schedule::leaf_assignments(leaf_level, self.threads).get(i) {
            for l in own.start..own.end {
                let value = self.kernel.leaf(l).unwrap_or_else(|e| {
                    self.record(leaf_level, l, e);
                    K::Value::default()
                });
                // SAFETY: leaf columns are split disjointly.
                unsafe { self.buffer.set(0, l, value) };
            }
        }

        for plan in Schedule::new(leaf_level, self.threads, self.block_levels) {
            if i < plan.p_active {
                let start = plan.assignments[i].start;
                for t in plan.levels() {
                    for l in plan.region_a(i, t) {
                        self.compute(&plan, t, l);
                        if i > 0 && t == plan.trigger_level && l == start {
                            self.signals.raise(i);
                        }
                    }
                }
                if !plan.is_last_worker(i) {
                    self.signals.consume(i + 1);
                    for t in plan.levels() {
                        for l in plan.region_b(i, t) {
                            self.compute(&plan, t, l);
                        }
                    }
                }
            }
            self.barrier.wait();
        }
    }
}

/// Runs `kernel` from its leaf level to the root with `threads` workers and
/// at most `block_levels` levels per round.
///
/// The root value is bitwise identical to [`crate::seq::backward_induction`]
/// for every `threads` and `block_levels`. On failure the error of the node
/// the sequential order reaches first is returned.
///
/// # Panics
/// If `threads` or `block_levels` is zero.
pub fn run<K: NodeKernel>(kernel: &K, threads: usize, block_levels: usize) -> Result<K::Value, K::Error> {
    assert!(threads >= 1, "at least one worker is required");
    assert!(block_levels >= 1, "block_levels must be at least 1");
    let leaf_level = kernel.leaf_level();
    if leaf_level == 0 {
        return kernel.leaf(0);
    }

    let root_row = Schedule::new(leaf_level, threads, block_levels)
        .last()
        .map_or(0, |plan| plan.row_of(0));
    let mut shared = Shared {
        kernel,
        threads,
        block_levels,
        buffer: LevelBuffer::new(block_levels + 1, leaf_level + 1),
        signals: SignalBoard::new(threads),
        barrier: Barrier::new(threads),
        failure: Mutex::new(None),
    };

    if threads == 1 {
        shared.worker(0);
    } else {
        let shared = &shared;
        thread::scope(|s| {
            for i in 1..threads {
                s.spawn(move || shared.worker(i));
            }
            shared.worker(0);
        });
    }

    match shared.failure.into_inner().unwrap_or_else(|e| e.into_inner()) {
        Some(f) => Err(f.error),
        None => Ok(std::mem::take(shared.buffer.get_mut(root_row, 0))),
    }
}
