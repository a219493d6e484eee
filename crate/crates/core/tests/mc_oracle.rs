//! Monte-Carlo engines against each other and against the analytic rates.

mod common;

use common::{oracle_checks, random_configs, reference};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use timebin_core::montecarlo::{simulate_gates_direct, simulate_with, SimOptions};
use timebin_core::{predict_rates, simulate_gates, Arm, ExperimentConfig, GateBatchResult};

/// Two-sample Poisson z-score.
fn z(a: u64, b: u64) -> f64 {
    (a as f64 - b as f64) / ((a + b) as f64).max(1.0).sqrt()
}

fn counters(r: &GateBatchResult) -> Vec<u64> {
    let mut v = vec![r.singles_s, r.singles_i, r.slot2_coincidences];
    v.extend(&r.histogram.counts);
    v
}

/// A brighter variant so that a short direct run still sees coincidences.
fn bright(mut cfg: ExperimentConfig) -> ExperimentConfig {
    cfg.source.mu_c_ref *= 4.0;
    for arm in Arm::BOTH {
        cfg.detectors.get_mut(arm).efficiency = (cfg.detectors.get(arm).efficiency * 3.0).min(1.0);
    }
    cfg
}

#[test]
fn fast_engine_matches_direct_engine() {
    let mut configs = vec![bright(reference()), bright(reference().without_interferometers())];
    configs.extend(random_configs(4, 77).into_iter().map(bright));
    let n = 1_000_000;
    let mut zs = Vec::new();
    for (idx, cfg) in configs.iter().enumerate() {
        let single_batch = SimOptions { seed: 1000 + idx as u64, batch_gates: n, stream_offset: 0 };
        let fast = simulate_with(cfg, n, &single_batch).unwrap();
        let direct = simulate_gates_direct(cfg, n, 2000 + idx as u64).unwrap();
        assert_eq!(fast.window_gates, direct.window_gates);
        zs.extend(counters(&fast).into_iter().zip(counters(&direct)).map(|(a, b)| z(a, b)));
    }
    let outside = zs.iter().filter(|z| z.abs() > 3.0).count();
    assert!(zs.iter().all(|z| z.abs() < 5.0), "{zs:?}");
    assert!(outside * 50 <= zs.len(), "{outside} of {}", zs.len());
}

#[test]
fn direct_engine_matches_model() {
    let cfg = bright(reference());
    let result = simulate_gates_direct(&cfg, 2_000_000, 5).unwrap();
    let prediction = predict_rates(&cfg, common::idler_phase(&cfg)).unwrap();
    for check in oracle_checks(&result, &prediction) {
        assert!(check.z().abs() < 4.0, "{}: {} vs {}", check.name, check.observed, check.expected);
    }
}

#[test]
fn ten_million_gates_match_model() {
    let mut checks = Vec::new();
    for (idx, cfg) in random_configs(40, 31).iter().enumerate() {
        let result = simulate_gates(cfg, 10_000_000, idx as u64).unwrap();
        let prediction = predict_rates(cfg, common::idler_phase(cfg)).unwrap();
        checks.extend(oracle_checks(&result, &prediction));
    }
    let failures: Vec<String> = checks
        .iter()
        .filter(|c| !c.passes())
        .map(|c| format!("{} z={:.2}", c.name, c.z()))
        .collect();
    assert!(checks.iter().all(|c| c.z().abs() < 5.0), "{failures:?}");
    assert!(failures.len() * 50 <= checks.len(), "{} of {}: {failures:?}", failures.len(), checks.len());
}

#[test]
fn identical_seed_and_partition_repeat() {
    let cfg = reference();
    let opts = SimOptions { seed: 9, batch_gates: 250_000, stream_offset: 0 };
    assert_eq!(simulate_with(&cfg, 3_000_000, &opts).unwrap(), simulate_with(&cfg, 3_000_000, &opts).unwrap());
    let other = SimOptions { seed: 10, ..opts };
    assert_ne!(simulate_with(&cfg, 3_000_000, &opts).unwrap(), simulate_with(&cfg, 3_000_000, &other).unwrap());
}

#[test]
fn merge_order_does_not_matter() {
    let cfg = reference();
    let parts: Vec<GateBatchResult> = (0..3)
        .map(|k| {
            let opts = SimOptions { seed: 4, batch_gates: 100_000, stream_offset: k * 100 };
            simulate_with(&cfg, 1_000_000, &opts).unwrap()
        })
        .collect();
    let fold = |order: [usize; 3]| {
        let mut acc = GateBatchResult::empty(cfg.tia_window);
        for i in order {
            acc.merge(&parts[i]).unwrap();
        }
        acc
    };
    let forward = fold([0, 1, 2]);
    assert_eq!(forward, fold([2, 0, 1]));
    assert_eq!(forward, fold([1, 2, 0]));
    assert_eq!(forward.n_gates, 3_000_000);
    assert_eq!(forward.singles_s, parts.iter().map(|p| p.singles_s).sum::<u64>());
}

#[test]
fn independent_arms_give_unit_c() {
    let mut cfg = reference().without_interferometers();
    cfg.source.mu_c_ref = 0.0;
    cfg.source.mu_sn_ref = 0.3;
    cfg.source.mu_in_ref = 0.3;
    let result = simulate_gates(&cfg, 2_000_000_000, 12).unwrap();
    let c = result.histogram.measured_c().unwrap();
    let err = result.histogram.measured_c_error().unwrap();
    assert!((c - 1.0).abs() < 3.0 * err, "C = {c} ± {err}");
    assert!(result.histogram.matched() > 1000);
}

#[test]
fn unmatched_delays_are_flat() {
    let cfg = reference().without_interferometers();
    let result = simulate_gates(&cfg, 4_000_000_000, 3).unwrap();
    let h = &result.histogram;
    let bins: Vec<f64> = [-2, -1, 1, 2].iter().map(|&d| h.count(d) as f64).collect();
    let mean = bins.iter().sum::<f64>() / bins.len() as f64;
    let chi2: f64 = bins.iter().map(|b| (b - mean).powi(2) / mean).sum();
    let p = 1.0 - ChiSquared::new((bins.len() - 1) as f64).unwrap().cdf(chi2);
    assert!(mean > 500.0, "{bins:?}");
    assert!(p > 1e-3, "chi2 = {chi2}, bins {bins:?}");
}
