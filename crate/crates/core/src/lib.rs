//! Binomial-lattice pricing of American options under proportional
//! transaction costs, with a frictionless scalar mode and a round-based
//! parallel scheduler.

pub mod pwl;
pub mod model;
pub mod seq;
pub mod parallel;
pub mod cli;
