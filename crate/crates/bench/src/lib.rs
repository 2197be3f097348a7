//! Shared fixtures for the benchmarks.

use pnrl::junction::LANES;

/// Deterministic pseudo-random inputs in `[0, 1)`, `n` vectors of length `dim`.
pub fn unit_inputs(n: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| {
            (0..dim)
                .map(|j| (pnrl::derive_seed(i as u64, j as u64) >> 11) as f64 / (1u64 << 53) as f64)
                .collect()
        })
        .collect()
}

/// A junction config with traffic on every lane.
pub fn busy_junction() -> pnrl::JunctionConfig {
    pnrl::JunctionConfig {
        lambda_per_lane: 0.15,
        lane_weights: [1.0; LANES],
        ..pnrl::JunctionConfig::default()
    }
}
