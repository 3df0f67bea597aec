//! Finite-difference suites, one per subsystem. Filled in alongside the
//! modules they check.

use super::CheckReport;

/// Placeholder until the per-module suites land.
pub fn all(_seed: u64) -> Vec<CheckReport> {
    Vec::new()
}
