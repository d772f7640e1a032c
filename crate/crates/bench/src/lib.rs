//! Shared fixtures for the benchmarks.

use aqrm_core::ModelParams;

/// `(label, params)` covering weak, intermediate and strong anisotropy.
pub fn fixtures() -> Vec<(&'static str, ModelParams)> {
    [("r0.2", 0.5, 0.8, 0.2), ("r1", 1.0, 1.0, 1.0), ("r2", 2.0, 1.2, 2.0)]
        .into_iter()
        .map(|(label, delta, g, r)| (label, ModelParams::new(delta, g, r).expect("valid fixture")))
        .collect()
}
