//! Fixtures shared by the benchmarks.

use timebin_core::analysis::{FringePoint, FringeScan};
use timebin_core::ExperimentConfig;

pub const REFERENCE_INI: &str = include_str!("../../../configs/reference.ini");

pub fn reference_config() -> ExperimentConfig {
    ExperimentConfig::from_ini_str(REFERENCE_INI).expect("bundled config parses")
}

/// Noise-free fringe with visibility `v` sampled at `points` phases.
pub fn synthetic_scan(points: usize, v: f64) -> FringeScan {
    let points = (0..points)
        .map(|k| {
            let theta = std::f64::consts::TAU * k as f64 / points as f64;
            let rate = 1e-6 * (1.0 + v * theta.cos()) + 6e-7;
            FringePoint { theta_rad: theta, rate, rate_err: 2e-8, singles: 8e-4 }
        })
        .collect();
    FringeScan { points, accidental_estimate: 6e-7, accidental_err: 1e-9 }
}
