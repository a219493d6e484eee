use std::f64::consts::TAU;

use crate::analysis::{FringePoint, FringeScan};
use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::montecarlo::engine::{simulate_with, GateBatchResult, SimOptions};

/// Scan table plus the raw counters behind every point.
#[derive(Debug, Clone, PartialEq)]
pub struct FringeRun {
    pub scan: FringeScan,
    pub points: Vec<GateBatchResult>,
}

/// `m` idler phases covering one period.
pub fn evenly_spaced_phases(m: usize) -> Vec<f64> {
    (0..m).map(|i| TAU * i as f64 / m as f64).collect()
}

/// Simulates every idler phase setting with its own block of streams.
///
/// Rates are coincidences per gate. The accidental estimate pools the
/// unmatched histogram delays of all points.
pub fn run_fringe_scan(cfg: &ExperimentConfig, thetas: &[f64], n_gates_per_point: u64, seed: u64) -> Result<FringeRun> {
    if cfg.interferometers.is_none() {
        return Err(Error::InvalidParameter { name: "interferometers", reason: "a fringe scan needs both interferometers".into() });
    }
    if thetas.len() < crate::analysis::fringe::MIN_SCAN_POINTS {
        return Err(Error::InvalidParameter { name: "thetas", reason: format!("{} points, need at least 5", thetas.len()) });
    }
    let mut points = Vec::with_capacity(thetas.len());
    let mut results = Vec::with_capacity(thetas.len());
    let (mut unmatched, mut unmatched_gates) = (0u64, 0u64);
    for (idx, &theta) in thetas.iter().enumerate() {
        let opts = SimOptions { seed, stream_offset: (idx as u64) << 32, ..SimOptions::default() };
        let r = simulate_with(&cfg.with_idler_phase(theta), n_gates_per_point, &opts)?;
        if r.window_gates == 0 {
            return Err(Error::InvalidParameter { name: "n_gates_per_point", reason: "too few gates for the TIA window".into() });
        }
        log::debug!("phase {theta:.4}: {} coincidences, {} idler singles", r.histogram.matched(), r.singles_i);
        let gates = r.window_gates as f64;
        let matched = r.histogram.matched() as f64;
        points.push(FringePoint {
            theta_rad: theta,
            rate: matched / gates,
            rate_err: matched.max(1.0).sqrt() / gates,
            singles: r.singles_i as f64 / r.n_gates as f64,
        });
        unmatched += r.histogram.unmatched_total();
        unmatched_gates += r.window_gates * 2 * r.histogram.window as u64;
        results.push(r);
    }
    let per_gate = unmatched_gates as f64;
    let scan = FringeScan {
        points,
        accidental_estimate: unmatched as f64 / per_gate,
        accidental_err: (unmatched as f64).max(1.0).sqrt() / per_gate,
    };
    Ok(FringeRun { scan, points: results })
}
