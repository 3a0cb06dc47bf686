//! Command-line harness around `splitadmm`: instance files, single solves,
//! benchmark grids and diagnostic checks.

pub mod bench;
pub mod check;
pub mod instance;
pub mod matfile;
pub mod solve;

pub use instance::{Instance, ProblemSpec};
pub use solve::{solve, Outcome, Preset, SolveOptions};

/// Process exit codes.
pub mod exit {
    pub const CONVERGED: u8 = 0;
    /// I/O and data errors, and `check` runs that found a violation.
    pub const FAILURE: u8 = 1;
    pub const MAX_ITER: u8 = 2;
    pub const NUMERIC_FAILURE: u8 = 3;
    pub const USAGE: u8 = 64;
}
