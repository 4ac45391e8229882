//! Harness around the physics library: configuration files, experiment
//! orchestration, CSV/JSON emission, and tolerances for the verdict checks.

// Validation guards are written `!(x > 0.0)` so NaN fails them too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod report;
pub mod runs;
pub mod tolerances;
pub mod units;

use thiserror::Error;

/// Harness-level failures, separated so the binary can map them to exit
/// codes: config/IO problems exit 2, numerical invariant aborts exit 3.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("numerical invariant violated: {0}")]
    Numerical(#[from] snlab_core::Error),
}

pub type Result<T> = std::result::Result<T, HarnessError>;

/// Builds the global worker pool from `SNLAB_THREADS` (0 or unset = auto).
/// Safe to call more than once; later calls are no-ops.
pub fn init_thread_pool() -> usize {
    let requested = std::env::var("SNLAB_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .unwrap_or(0);
    if requested > 0 {
        // Ignore the error if a pool already exists (e.g. repeated runs in
        // one test process).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(requested)
            .build_global();
    }
    rayon::current_num_threads()
}
