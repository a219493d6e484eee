//! Gated detectors and the time-interval analyzer.

use std::fmt::Write as _;

use rand::Rng;

use crate::config::{Arm, DetectorConfig, GatedSlot};
use crate::error::{Error, Result};
use crate::model::{DispersionPenalty, SLOTS};

/// One detector click. At most one per gate and arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClickRecord {
    pub gate_index: u64,
    pub arm: Arm,
    pub slot: u8,
}

/// Click probabilities of a gated detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorResponse {
    /// Click probability of one photon arriving in slot 1, 2, 3.
    pub acceptance: [f64; SLOTS],
    pub dark: f64,
    /// Slot reported for a dark click.
    pub dark_slot: u8,
}

impl DetectorResponse {
    pub fn new(acceptance: [f64; SLOTS], dark: f64) -> Self {
        Self { acceptance, dark, dark_slot: 2 }
    }

    /// Response including quantum efficiency and the gate collection of the
    /// (possibly broadened) pulse.
    pub fn from_config(det: &DetectorConfig, penalty: &DispersionPenalty) -> Self {
        let collection = match det.gated_slot {
            GatedSlot::Slot2Only => [penalty.adjacent_leakage, penalty.gate_collection, penalty.adjacent_leakage],
            GatedSlot::EveryBin => [penalty.gate_collection; SLOTS],
        };
        Self::new(collection.map(|c| c * det.efficiency), det.dark_count_per_gate)
    }

    /// Click decision from pre-drawn uniforms: one per arrival, then one for the dark count.
    ///
    /// Returns the slot of the first clicking arrival, or `dark_slot` for a dark click.
    pub fn detect_with(&self, arrivals: &[u8], arrival_uniforms: &[f64], dark_uniform: f64) -> Option<u8> {
        debug_assert_eq!(arrivals.len(), arrival_uniforms.len());
        let mut click = None;
        for (&slot, &u) in arrivals.iter().zip(arrival_uniforms) {
            let p = match slot {
                1..=3 => self.acceptance[slot as usize - 1],
                _ => 0.0,
            };
            if click.is_none() && u < p {
                click = Some(slot);
            }
        }
        if click.is_none() && dark_uniform < self.dark {
            click = Some(self.dark_slot);
        }
        click
    }
}

/// One gate of one detector. All uniforms are drawn regardless of outcome so
/// that runs with different parameters stay coupled on a shared stream.
pub fn gated_detect<R: Rng + ?Sized>(arrivals: &[u8], response: &DetectorResponse, rng: &mut R) -> Option<u8> {
    let uniforms: Vec<f64> = arrivals.iter().map(|_| rng.random::<f64>()).collect();
    let dark = rng.random::<f64>();
    response.detect_with(arrivals, &uniforms, dark)
}

/// Start/stop histogram over delays `-window..=window` gate periods.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TIAHistogram {
    pub window: usize,
    pub counts: Vec<u64>,
    pub n_starts: u64,
}

impl TIAHistogram {
    pub fn new(window: usize) -> Self {
        Self { window, counts: vec![0; 2 * window + 1], n_starts: 0 }
    }

    pub fn count(&self, delay: i64) -> u64 {
        self.counts[(delay + self.window as i64) as usize]
    }

    pub fn delays(&self) -> impl Iterator<Item = i64> {
        let k = self.window as i64;
        -k..=k
    }

    pub fn matched(&self) -> u64 {
        self.counts[self.window]
    }

    /// Sum over all nonzero delays.
    pub fn unmatched_total(&self) -> u64 {
        self.counts.iter().sum::<u64>() - self.matched()
    }

    pub fn unmatched_mean(&self) -> f64 {
        self.unmatched_total() as f64 / (2 * self.window) as f64
    }

    pub fn merge(&mut self, other: &TIAHistogram) -> Result<()> {
        if other.window != self.window {
            return Err(Error::Inconsistent(format!(
                "cannot merge histograms with windows {} and {}",
                self.window, other.window
            )));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.n_starts += other.n_starts;
        Ok(())
    }

    /// Matched over mean unmatched counts.
    pub fn measured_c(&self) -> Result<f64> {
        if self.window == 0 || self.unmatched_total() == 0 {
            return Err(Error::NoAccidentals);
        }
        Ok(self.matched() as f64 / self.unmatched_mean())
    }

    /// Poisson standard error of [`measured_c`](Self::measured_c).
    pub fn measured_c_error(&self) -> Result<f64> {
        let c = self.measured_c()?;
        let matched = (self.matched() as f64).max(1.0);
        Ok(c * (1.0 / matched + 1.0 / self.unmatched_total() as f64).sqrt())
    }

    pub fn to_csv(&self, config_hash: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# n_starts={}", self.n_starts);
        let _ = writeln!(out, "# config_hash={config_hash}");
        out.push_str("delay_gate_periods,counts\n");
        for (delay, count) in self.delays().zip(&self.counts) {
            let _ = writeln!(out, "{delay},{count}");
        }
        out
    }
}

fn check_sorted(stream: &[u64]) -> Result<()> {
    match stream.windows(2).position(|w| w[1] <= w[0]) {
        Some(i) => Err(Error::UnsortedStream(i + 1)),
        None => Ok(()),
    }
}

/// Histograms, for every start, the earliest stop within `±window` gates.
///
/// Both streams are gate indices in strictly increasing order.
pub fn accumulate(starts: &[u64], stops: &[u64], window: usize) -> Result<TIAHistogram> {
    check_sorted(starts)?;
    check_sorted(stops)?;
    let mut hist = TIAHistogram::new(window);
    accumulate_into(&mut hist, starts, stops);
    Ok(hist)
}

/// Same as [`accumulate`] without the ordering check.
pub(crate) fn accumulate_into(hist: &mut TIAHistogram, starts: &[u64], stops: &[u64]) {
    let k = hist.window as u64;
    let mut first = 0;
    for &start in starts {
        let lo = start.saturating_sub(k);
        while first < stops.len() && stops[first] < lo {
            first += 1;
        }
        hist.n_starts += 1;
        if let Some(&stop) = stops.get(first) {
            if stop <= start + k {
                let idx = (stop as i64 - start as i64 + k as i64) as usize;
                hist.counts[idx] += 1;
            }
        }
    }
}
