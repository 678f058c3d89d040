//! Time-dependent vehicle routing toolkit.
//!
//! The crate is layered bottom-up:
//!
//! * [`plf`] holds the algebra of piecewise-linear arrival time functions.
//! * [`touratf`] stores per-tour compositions for fast splice evaluation.
//! * [`scheduler`] picks the cheapest start time for a tour.
//! * [`solver`] builds and improves multi-tour solutions.
//! * [`bench_io`] reads and writes instances and solutions and generates
//!   time-dependent benchmarks.

pub mod bench_io;
pub mod plf;
pub mod scheduler;
pub mod solver;
pub mod touratf;
