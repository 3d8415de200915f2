//! Round-based parallel backward induction.
//!
//! Each round takes a base level whose values are known and computes up to
//! `L` levels towards the root. The columns of the base level are split among
//! the workers; a worker first computes the staircase of nodes that depend
//! only on its own columns (region A), then waits for its right neighbour's
//! signal and finishes the triangle next to the boundary (region B). A barrier
//! closes the round and the split is recomputed for the next base level.

mod buffer;
mod engine;
mod plan;
mod signal;
mod verify;

pub use buffer::LevelBuffer;
pub use engine::run;
pub use plan::{
    active_workers, count_p0_nodes, count_worker_nodes, estimate_p0_nodes, plan_round, plan_round_at, split_columns,
    Assignment, RoundPlan, Schedule,
};
pub use signal::SignalBoard;
pub use verify::{verify_schedule, DryRun, ScheduleViolation};
