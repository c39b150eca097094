//! Shared fixtures for the criterion benchmarks.

use cbm_core::bench::{sample_instance, BenchConfig};
use cbm_core::SystemInstance;

/// Baseline-regime instance keyed by (seed, n, index).
pub fn baseline_instance(seed: u64, n: usize, index: usize) -> SystemInstance {
    let config = BenchConfig {
        seed,
        ..BenchConfig::default()
    };
    sample_instance(&config, n, index).expect("baseline instance")
}
