//! One-shot flags between adjacent workers.

use std::hint;
use std::sync::atomic::{AtomicBool, Ordering};
use std::thread;

const SPINS_BEFORE_YIELD: u32 = 64;

/// Flag `i` is raised by worker `i` and consumed by worker `i - 1`.
pub struct SignalBoard {
    flags: Vec<AtomicBool>,
}

impl SignalBoard {
    pub fn new(workers: usize) -> Self {
        SignalBoard {
            flags: (0..workers).map(|_| AtomicBool::new(false)).collect(),
        }
    }

    /// Publishes every write the caller made before this point.
    pub fn raise(&self, worker: usize) {
        self.flags[worker].store(true, Ordering::Release);
    }

    pub fn is_raised(&self, worker: usize) -> bool {
        self.flags[worker].load(Ordering::Acquire)
    }

    /// Blocks until flag `worker` is raised, then lowers it for the next round.
    pub fn consume(&self, worker: usize) {
        let flag = &self.flags[worker];
        let mut spins = 0u32;
        while !flag.load(Ordering::Acquire) {
            if spins < SPINS_BEFORE_YIELD {
                spins += 1;
                hint::spin_loop();
            } else {
                thread::yield_now();
            }
        }
        flag.store(false, Ordering::Relaxed);
    }
}
