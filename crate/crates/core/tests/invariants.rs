//! Property tests over the analytic model and the detection primitives.

mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{PI, TAU};
use timebin_core::analysis::subtract_accidentals;
use timebin_core::config::FiberSpool;
use timebin_core::model::dispersion::bandwidth_ghz;
use timebin_core::model::rates::ArmOptics;
use timebin_core::model::{
    build_joint_amplitudes, coincidence_ratio, estimate_correlated_fraction, singles_rate,
    slot2_coincidence_probability,
};
use timebin_core::{accumulate, predict_rates, Arm, DetectorResponse, ExperimentConfig};

fn extinction() -> impl Strategy<Value = f64> {
    prop_oneof![Just(f64::NEG_INFINITY), -40.0..-10.0f64]
}

fn correlation_config(mu_sn: f64, mu_in: f64, dark: f64) -> ExperimentConfig {
    let mut cfg = common::reference().without_interferometers();
    cfg.source.mu_sn_ref = mu_sn;
    cfg.source.mu_in_ref = mu_in;
    for arm in Arm::BOTH {
        cfg.detectors.get_mut(arm).dark_count_per_gate = dark;
    }
    cfg
}

fn c_ratio(cfg: &ExperimentConfig) -> f64 {
    predict_rates(cfg, 0.0).unwrap().c_ratio
}

fn sorted_stream(raw: Vec<u64>) -> Vec<u64> {
    let mut s = raw;
    s.sort_unstable();
    s.dedup();
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn table_is_normalized(phi in 0.0..TAU, ts in 0.0..TAU, ti in 0.0..TAU, es in extinction(), ei in extinction()) {
        let t = build_joint_amplitudes(phi, ts, ti, es, ei).unwrap();
        prop_assert!((t.detected_weight() + t.loss_weight() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fringe_depends_on_phase_sum(
        phi in 0.0..TAU, ts in 0.0..TAU, ti in 0.0..TAU, d in -10.0..10.0f64, es in extinction(), ei in extinction()
    ) {
        let a = slot2_coincidence_probability(&build_joint_amplitudes(phi, ts, ti, es, ei).unwrap());
        let shifted = slot2_coincidence_probability(&build_joint_amplitudes(phi, ts + d, ti - d, es, ei).unwrap());
        let global = slot2_coincidence_probability(&build_joint_amplitudes(phi + d, ts + d, ti, es, ei).unwrap());
        prop_assert!((a - shifted).abs() < 1e-14);
        prop_assert!((a - global).abs() < 1e-14);
    }

    #[test]
    fn pump_phase_has_period_pi(pump in 0.0..TAU, theta in 0.0..TAU) {
        let mut cfg = common::reference();
        cfg.pump.phase_rad = pump;
        let a = predict_rates(&cfg, theta).unwrap();
        cfg.pump.phase_rad = pump + PI;
        let b = predict_rates(&cfg, theta).unwrap();
        prop_assert!((a.r_m - b.r_m).abs() <= 1e-12 * a.r_m);
        prop_assert!((a.fringe_max - b.fringe_max).abs() <= 1e-12 * a.fringe_max);
    }

    #[test]
    fn c_falls_with_noise(mu_sn in 0.0..0.3f64, mu_in in 0.0..0.3f64, extra in 0.001..0.2f64, dark in 1e-6..1e-3f64) {
        let base = c_ratio(&correlation_config(mu_sn, mu_in, dark));
        prop_assert!(c_ratio(&correlation_config(mu_sn + extra, mu_in, dark)) < base);
        prop_assert!(c_ratio(&correlation_config(mu_sn, mu_in + extra, dark)) < base);
        prop_assert!(c_ratio(&correlation_config(mu_sn, mu_in, dark * 2.0)) < base);
    }

    #[test]
    fn c_approaches_one(mu_c in 1e-3..0.2f64, shrink in 0.0..2.0f64) {
        let weak_pairs = |s: f64| {
            let mut cfg = correlation_config(0.1, 0.1, 5e-5);
            cfg.source.mu_c_ref = mu_c * 10f64.powf(-s);
            c_ratio(&cfg)
        };
        let lossy_arms = |s: f64| {
            let mut cfg = correlation_config(0.1, 0.1, 5e-5);
            cfg.source.mu_c_ref = mu_c;
            for arm in Arm::BOTH {
                cfg.detectors.get_mut(arm).efficiency = 0.1 * 10f64.powf(-s);
            }
            c_ratio(&cfg)
        };
        for f in [&weak_pairs as &dyn Fn(f64) -> f64, &lossy_arms] {
            let steps: Vec<f64> = (0..4).map(|k| f(shrink + 2.0 * k as f64) - 1.0).collect();
            prop_assert!(steps.iter().all(|&x| x > 0.0), "{steps:?}");
            prop_assert!(steps.windows(2).all(|w| w[1] < w[0]), "{steps:?}");
            prop_assert!(steps[3] < 1e-3 * steps[0], "{steps:?}");
        }
    }

    #[test]
    fn inversion_round_trip(
        mu_c in 1e-3..0.3f64, mu_sn in 0.0..0.3f64, mu_in in 0.0..0.3f64,
        a_s in 1e-3..0.5f64, a_i in 1e-3..0.5f64, d_s in 0.0..1e-3f64, d_i in 0.0..1e-3f64
    ) {
        let c_s = singles_rate(mu_c, mu_sn, a_s, d_s).unwrap();
        let c_i = singles_rate(mu_c, mu_in, a_i, d_i).unwrap();
        let c = coincidence_ratio(mu_c, a_s, a_i, c_s, c_i).unwrap();
        let back = estimate_correlated_fraction(c, c_s, c_i, a_s, a_i, d_s, d_i).unwrap();
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-9 * y.max(1e-3);
        prop_assert!(close(back.means.mu_c, mu_c));
        prop_assert!(close(back.means.mu_sn, mu_sn));
        prop_assert!(close(back.means.mu_in, mu_in));
    }

    #[test]
    fn subtraction_clears_the_floor(r in 0.0..1.0f64, s in 0.0..0.1f64) {
        prop_assert_eq!(subtract_accidentals(r, s, 0.0, 0.0), (r, s));
    }

    #[test]
    fn visibilities_are_ordered(seed in any::<u64>()) {
        for cfg in common::random_configs(4, seed) {
            let p = predict_rates(&cfg, common::idler_phase(&cfg)).unwrap();
            prop_assert!(p.c_ratio >= 1.0);
            prop_assert!((0.0..=1.0).contains(&p.v_sub));
            if cfg.interferometers.is_some() {
                prop_assert!(p.v_raw < p.v_sub, "{} vs {}", p.v_raw, p.v_sub);
            }
        }
    }

    #[test]
    fn subtracted_visibility_ignores_losses(extra_s in 0.0..6.0f64, extra_i in 0.0..6.0f64) {
        let cfg = common::reference();
        let base = predict_rates(&cfg, 0.0).unwrap().v_sub;
        let mut lossy = cfg.clone();
        lossy.channels.signal.excess_loss_db += extra_s;
        lossy.channels.idler.excess_loss_db += extra_i;
        let v = predict_rates(&lossy, 0.0).unwrap().v_sub;
        prop_assert!((v - base).abs() < 0.01, "{base} -> {v}");
    }

    #[test]
    fn broadband_photons_wash_out_the_fringe(length in 10.0..50.0f64, width_nm in 10.0..30.0f64) {
        let narrow = common::reference().with_fiber(length, FiberSpool::STANDARD_SMF);
        let mut broad = narrow.clone();
        for arm in Arm::BOTH {
            broad.channels.get_mut(arm).bandwidth_ghz = bandwidth_ghz(width_nm);
        }
        prop_assert!(ArmOptics::new(&broad, Arm::Signal).penalty.overlap);
        let drop = predict_rates(&narrow, 0.0).unwrap().v_raw - predict_rates(&broad, 0.0).unwrap().v_raw;
        prop_assert!(drop > 0.2, "drop {drop}");
    }

    #[test]
    fn histogram_never_exceeds_starts(
        starts in prop::collection::vec(0u64..500, 0..80),
        stops in prop::collection::vec(0u64..500, 0..80),
        k in 0usize..6
    ) {
        let h = accumulate(&sorted_stream(starts), &sorted_stream(stops), k).unwrap();
        prop_assert!(h.counts.iter().sum::<u64>() <= h.n_starts);
    }

    #[test]
    fn wider_window_keeps_mass(
        starts in prop::collection::vec(0u64..500, 0..80),
        stops in prop::collection::vec(0u64..500, 0..80),
        k in 0usize..6
    ) {
        let (starts, stops) = (sorted_stream(starts), sorted_stream(stops));
        let narrow = accumulate(&starts, &stops, k).unwrap().counts.iter().sum::<u64>();
        let wide = accumulate(&starts, &stops, k + 1).unwrap().counts.iter().sum::<u64>();
        prop_assert!(wide >= narrow);
    }

    #[test]
    fn higher_efficiency_never_loses_clicks(
        arrivals in prop::collection::vec(1u8..=3, 0..4),
        low in 0.0..1.0f64, gain in 0.0..1.0f64, dark in 0.0..0.01f64, seed in any::<u64>()
    ) {
        let high = low + (1.0 - low) * gain;
        let weak = DetectorResponse::new([low * 0.5, low, low * 0.5], dark);
        let strong = DetectorResponse::new([high * 0.5, high, high * 0.5], dark);
        let mut a = ChaCha8Rng::seed_from_u64(seed);
        let mut b = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..64 {
            let w = timebin_core::gated_detect(&arrivals, &weak, &mut a);
            let s = timebin_core::gated_detect(&arrivals, &strong, &mut b);
            prop_assert!(w.is_none() || s.is_some());
        }
    }
}
