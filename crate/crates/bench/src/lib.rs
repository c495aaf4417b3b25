//! Benchmark-only crate; see the `benches/` directory.

use henon_core::{OperatorVariant, ProblemParams};

/// Reference configuration used across the benchmarks.
pub fn reference_params() -> ProblemParams {
    ProblemParams::new(OperatorVariant::Plus, 1.0, 1.5, 4, 4.0, 0.0).unwrap()
}
