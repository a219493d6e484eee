//! Singles, coincidence and visibility predictions.
//!
//! The two textbook relations
//!
//! ```text
//! c_x = (μc + μxn)·αx + dx
//! C   = μc·αs·αi / (cs·ci) + 1
//! ```
//!
//! are exposed directly ([`singles_rate`], [`coincidence_ratio`]) together with
//! their inverse. [`predict_rates`] is the exact per-gate model of the
//! simulated experiment (Poisson pair and noise numbers, click collapse,
//! dark counts, slot gating) and serves as the oracle for the Monte Carlo.

use crate::config::{Arm, ArmPair, ExperimentConfig, GatedSlot};
use crate::error::{check_non_negative, check_probability, Error, Result};
use crate::model::amplitude::{build_joint_amplitudes, bypass_table, AmplitudeTable, SLOTS};
use crate::model::dispersion::{dispersion_penalty, DispersionPenalty};
use crate::model::source::{effective_means, PhotonMeans};

/// Mean number of photons emitted per double pulse for a per-pulse mean.
pub const PULSES_PER_GATE: f64 = 2.0;

/// Average count probability per gate.
pub fn singles_rate(mu_c: f64, mu_xn: f64, alpha_x: f64, d_x: f64) -> Result<f64> {
    check_non_negative("mu_c", mu_c)?;
    check_non_negative("mu_xn", mu_xn)?;
    check_probability("alpha_x", alpha_x)?;
    check_probability("d_x", d_x)?;
    let c = (mu_c + mu_xn) * alpha_x + d_x;
    if c > 1.0 {
        return Err(Error::Regime(format!("singles rate {c} per gate exceeds one")));
    }
    Ok(c)
}

/// Matched to unmatched coincidence ratio.
pub fn coincidence_ratio(mu_c: f64, alpha_s: f64, alpha_i: f64, c_s: f64, c_i: f64) -> Result<f64> {
    if c_s <= 0.0 {
        return Err(Error::ZeroSingles("signal"));
    }
    if c_i <= 0.0 {
        return Err(Error::ZeroSingles("idler"));
    }
    check_non_negative("mu_c", mu_c)?;
    Ok(mu_c * alpha_s * alpha_i / (c_s * c_i) + 1.0)
}

/// Photon numbers inferred from a measured C and the singles rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelatedFraction {
    pub means: PhotonMeans,
    pub fraction_s: f64,
    pub fraction_i: f64,
}

/// Inverts the singles and C relations for the correlated and noise means.
pub fn estimate_correlated_fraction(
    c_measured: f64,
    c_s: f64,
    c_i: f64,
    alpha_s: f64,
    alpha_i: f64,
    d_s: f64,
    d_i: f64,
) -> Result<CorrelatedFraction> {
    if !(c_measured >= 1.0) {
        return Err(Error::InvalidParameter { name: "C", reason: format!("{c_measured} must be >= 1") });
    }
    for (name, a) in [("alpha_s", alpha_s), ("alpha_i", alpha_i)] {
        if !(a > 0.0 && a <= 1.0) {
            return Err(Error::InvalidParameter { name, reason: format!("{a} must be in (0, 1]") });
        }
    }
    let mu_c = (c_measured - 1.0) * c_s * c_i / (alpha_s * alpha_i);
    let mu_sn = (c_s - d_s) / alpha_s - mu_c;
    let mu_in = (c_i - d_i) / alpha_i - mu_c;
    // allow round-off around zero
    let tolerance = 1e-12 * (mu_c + 1e-300);
    for (quantity, value) in [("mu_sn", mu_sn), ("mu_in", mu_in)] {
        if value < -tolerance {
            return Err(Error::NegativeEstimate { quantity, value });
        }
    }
    let (mu_sn, mu_in) = (mu_sn.max(0.0), mu_in.max(0.0));
    let fraction = |noise: f64| if mu_c + noise > 0.0 { mu_c / (mu_c + noise) } else { 0.0 };
    Ok(CorrelatedFraction {
        means: PhotonMeans { mu_c, mu_sn, mu_in },
        fraction_s: fraction(mu_sn),
        fraction_i: fraction(mu_in),
    })
}

/// Everything between the source and a detector click for one arm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmOptics {
    /// Channel transmittance including interferometer insertion loss.
    pub transmittance: f64,
    pub efficiency: f64,
    pub dark: f64,
    /// Probability that a photon arriving in slot 1, 2, 3 falls inside the gate.
    pub slot_collection: [f64; SLOTS],
    pub penalty: DispersionPenalty,
}

impl ArmOptics {
    pub fn new(cfg: &ExperimentConfig, arm: Arm) -> Self {
        let ch = cfg.channels.get(arm);
        let det = cfg.detectors.get(arm);
        let interferometer_loss =
            cfg.interferometers.as_ref().map_or(0.0, |ifs| ifs.get(arm).insertion_loss_db);
        let penalty = dispersion_penalty(
            ch.bandwidth_ghz,
            ch.dispersion_ps_per_nm_km,
            ch.length_km,
            cfg.pump.pulse_width_ps,
            det.gate_width_ns,
            cfg.pump.bin_separation_ns,
        );
        let slot_collection = match det.gated_slot {
            GatedSlot::Slot2Only => [penalty.adjacent_leakage, penalty.gate_collection, penalty.adjacent_leakage],
            GatedSlot::EveryBin => [penalty.gate_collection; SLOTS],
        };
        Self {
            transmittance: 10f64.powf(-(ch.loss_db() + interferometer_loss) / 10.0),
            efficiency: det.efficiency,
            dark: det.dark_count_per_gate,
            slot_collection,
            penalty,
        }
    }

    /// Slot-independent transmittance, detector efficiency included.
    pub fn alpha(&self) -> f64 {
        self.transmittance * self.efficiency
    }

    /// Detection probability of a photon with the given slot distribution.
    fn detection(&self, slots: &[f64; SLOTS]) -> f64 {
        self.alpha() * slots.iter().zip(&self.slot_collection).map(|(p, c)| p * c).sum::<f64>()
    }
}

pub fn arm_optics(cfg: &ExperimentConfig) -> ArmPair<ArmOptics> {
    ArmPair::new(ArmOptics::new(cfg, Arm::Signal), ArmOptics::new(cfg, Arm::Idler))
}

/// Slot distribution of a single noise photon in the used output port.
/// Noise fills both bins uniformly and does not interfere.
pub fn noise_slot_distribution(with_interferometer: bool) -> [f64; SLOTS] {
    if with_interferometer {
        [0.125, 0.25, 0.125]
    } else {
        [0.5, 0.5, 0.0]
    }
}

/// Joint table for the configured interferometers at the given idler phase,
/// or the bypass table when there are none.
pub fn joint_table(cfg: &ExperimentConfig, theta_i: f64) -> Result<AmplitudeTable> {
    let phi = cfg.pump.two_photon_phase();
    match &cfg.interferometers {
        Some(ifs) => build_joint_amplitudes(
            phi,
            ifs.signal.phase_rad,
            theta_i,
            ifs.signal.extinction_ratio_db,
            ifs.idler.extinction_ratio_db,
        ),
        None => bypass_table(phi),
    }
}

/// Predicted per-gate probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct RatePrediction {
    pub means: PhotonMeans,
    /// Per-pulse transmittances as they enter the C relation.
    pub alpha_s: f64,
    pub alpha_i: f64,
    pub c_s: f64,
    pub c_i: f64,
    /// Both detectors click in the same gate.
    pub r_m: f64,
    /// Clicks in gates one or more periods apart.
    pub r_um: f64,
    pub c_ratio: f64,
    pub fringe_max: f64,
    pub fringe_min: f64,
    pub v_raw: f64,
    pub v_sub: f64,
}

impl RatePrediction {
    /// Expected histogram entries per gate for delays `-window..=window`
    /// when each start takes the earliest stop in its window.
    pub fn tia_expectation(&self, window: usize) -> Vec<f64> {
        let k = window as i32;
        let miss = 1.0 - self.c_i;
        (-k..=k)
            .map(|delay| match delay {
                d if d < 0 => self.c_s * self.c_i * miss.powi(d + k),
                0 => self.r_m * miss.powi(k),
                d => (self.c_s - self.r_m) * miss.powi(k + d - 1) * self.c_i,
            })
            .collect()
    }

    /// Matched over mean unmatched histogram entries implied by
    /// [`tia_expectation`](Self::tia_expectation).
    pub fn expected_measured_c(&self, window: usize) -> f64 {
        let h = self.tia_expectation(window);
        let unmatched: f64 = h.iter().sum::<f64>() - h[window];
        h[window] / (unmatched / (2 * window) as f64)
    }
}

struct GateProbabilities {
    c_s: f64,
    c_i: f64,
    r_m: f64,
}

fn gate_probabilities(
    table: &AmplitudeTable,
    means: &PhotonMeans,
    optics: &ArmPair<ArmOptics>,
    noise_slots: &[f64; SLOTS],
) -> GateProbabilities {
    let (s, i) = (&optics.signal, &optics.idler);
    let pair_s = s.detection(&table.signal_marginal());
    let pair_i = i.detection(&table.idler_marginal());
    let mut pair_both = 0.0;
    for j in 1..=SLOTS {
        for k in 1..=SLOTS {
            pair_both += table.probability(j, k) * s.slot_collection[j - 1] * i.slot_collection[k - 1];
        }
    }
    pair_both *= s.alpha() * i.alpha();

    let pairs = PULSES_PER_GATE * means.mu_c;
    let lambda_s = pairs * pair_s + PULSES_PER_GATE * means.mu_sn * s.detection(noise_slots);
    let lambda_i = pairs * pair_i + PULSES_PER_GATE * means.mu_in * i.detection(noise_slots);
    let lambda_both = pairs * pair_both;

    let c_s = 1.0 - (1.0 - s.dark) * (-lambda_s).exp();
    let c_i = 1.0 - (1.0 - i.dark) * (-lambda_i).exp();
    // P(s)+P(i)-1+P(neither), rearranged to stay accurate when pairs are rare
    let r_m = c_s * c_i + (1.0 - c_s) * (1.0 - c_i) * lambda_both.exp_m1();
    GateProbabilities { c_s, c_i, r_m }
}

/// Exact per-gate rates of the configured experiment at idler phase `theta_i`.
pub fn predict_rates(cfg: &ExperimentConfig, theta_i: f64) -> Result<RatePrediction> {
    let means = effective_means(&cfg.source, cfg.pump.relative_power)?;
    let optics = arm_optics(cfg);
    let with_interferometer = cfg.interferometers.is_some();
    let noise_slots = noise_slot_distribution(with_interferometer);

    let here = gate_probabilities(&joint_table(cfg, theta_i)?, &means, &optics, &noise_slots);
    let r_um = here.c_s * here.c_i;
    if r_um <= 0.0 {
        return Err(Error::ZeroSingles(if here.c_s <= 0.0 { "signal" } else { "idler" }));
    }

    let (fringe_max, fringe_min) = match &cfg.interferometers {
        Some(ifs) => {
            let peak = cfg.pump.two_photon_phase() - ifs.signal.phase_rad;
            let max = gate_probabilities(&joint_table(cfg, peak)?, &means, &optics, &noise_slots).r_m;
            let min =
                gate_probabilities(&joint_table(cfg, peak + std::f64::consts::PI)?, &means, &optics, &noise_slots)
                    .r_m;
            (max, min)
        }
        None => (here.r_m, here.r_m),
    };
    let spread = fringe_max - fringe_min;
    let v_raw = if fringe_max + fringe_min > 0.0 { spread / (fringe_max + fringe_min) } else { 0.0 };
    let true_sum = fringe_max + fringe_min - 2.0 * r_um;
    let v_sub = if true_sum > 0.0 { spread / true_sum } else { 0.0 };

    // α per pulse: the gate sees the bypass slot distribution of two pulses.
    let bypass = [0.5, 0.5, 0.0];
    let per_pulse = |o: &ArmOptics| PULSES_PER_GATE * o.detection(&bypass);

    Ok(RatePrediction {
        means,
        alpha_s: per_pulse(&optics.signal),
        alpha_i: per_pulse(&optics.idler),
        c_s: here.c_s,
        c_i: here.c_i,
        r_m: here.r_m,
        r_um,
        c_ratio: here.r_m / r_um,
        fringe_max,
        fringe_min,
        v_raw,
        v_sub,
    })
}
