#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use timebin_core::config::FiberSpool;
use timebin_core::montecarlo::GateBatchResult;
use timebin_core::{Arm, ExperimentConfig, GatedSlot, RatePrediction};

pub const REFERENCE: &str = include_str!("../../../../configs/reference.ini");
pub const IDEAL: &str = include_str!("../../../../configs/ideal.ini");

pub fn reference() -> ExperimentConfig {
    ExperimentConfig::from_ini_str(REFERENCE).unwrap()
}

pub fn ideal() -> ExperimentConfig {
    ExperimentConfig::from_ini_str(IDEAL).unwrap()
}

/// Random but physically sensible variations around the reference setup.
pub fn random_configs(count: usize, seed: u64) -> Vec<ExperimentConfig> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut cfg = reference();
            if rng.random_bool(0.3) {
                cfg = cfg.without_interferometers();
            }
            cfg.source.mu_c_ref = rng.random_range(0.005..0.25);
            cfg.source.mu_sn_ref = rng.random_range(0.0..0.3);
            cfg.source.mu_in_ref = rng.random_range(0.0..0.3);
            cfg.source.polarizer = rng.random_bool(0.5);
            cfg.pump.relative_power = rng.random_range(0.3..1.5);
            cfg.pump.phase_rad = rng.random_range(0.0..std::f64::consts::TAU);
            if rng.random_bool(0.3) {
                cfg = cfg.with_fiber(rng.random_range(1.0..20.0), FiberSpool::STANDARD_SMF);
                if rng.random_bool(0.5) {
                    for arm in Arm::BOTH {
                        cfg.channels.get_mut(arm).bandwidth_ghz = rng.random_range(200.0..1500.0);
                    }
                }
            }
            for arm in Arm::BOTH {
                cfg.channels.get_mut(arm).excess_loss_db = rng.random_range(1.0..10.0);
                let det = cfg.detectors.get_mut(arm);
                det.efficiency = rng.random_range(0.05..0.3);
                det.dark_count_per_gate = rng.random_range(1e-6..2e-4);
                if rng.random_bool(0.3) {
                    det.gated_slot = GatedSlot::EveryBin;
                }
            }
            if let Some(ifs) = cfg.interferometers.as_mut() {
                for arm in Arm::BOTH {
                    let i = ifs.get_mut(arm);
                    i.phase_rad = rng.random_range(0.0..std::f64::consts::TAU);
                    i.extinction_ratio_db = rng.random_range(-35.0..-12.0);
                }
            }
            cfg
        })
        .collect()
}

pub fn idler_phase(cfg: &ExperimentConfig) -> f64 {
    cfg.interferometers.as_ref().map_or(0.0, |i| i.idler.phase_rad)
}

/// One comparison of a simulated count with its expectation.
pub struct Check {
    pub name: String,
    pub observed: f64,
    pub expected: f64,
}

impl Check {
    /// Poisson standard errors between observation and expectation.
    pub fn z(&self) -> f64 {
        (self.observed - self.expected) / self.expected.max(1.0).sqrt()
    }

    pub fn passes(&self) -> bool {
        self.z().abs() <= 3.0
    }
}

/// Singles, same-gate coincidences and every histogram bin against the model.
pub fn oracle_checks(result: &GateBatchResult, prediction: &RatePrediction) -> Vec<Check> {
    let n = result.n_gates as f64;
    let mut checks = vec![
        Check { name: "singles_s".into(), observed: result.singles_s as f64, expected: n * prediction.c_s },
        Check { name: "singles_i".into(), observed: result.singles_i as f64, expected: n * prediction.c_i },
        Check { name: "r_m".into(), observed: result.slot2_coincidences as f64, expected: n * prediction.r_m },
    ];
    let expectation = prediction.tia_expectation(result.histogram.window);
    for ((delay, count), e) in result.histogram.delays().zip(&result.histogram.counts).zip(expectation) {
        checks.push(Check {
            name: format!("tia[{delay}]"),
            observed: *count as f64,
            expected: e * result.window_gates as f64,
        });
    }
    checks
}
