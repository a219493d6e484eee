//! Gate-level simulation.
//!
//! Pairs and noise photons are Poisson in every gate, and loss, efficiency
//! and gate collection act on each photon independently, so the detected
//! events of each kind (pair clicking in the signal arm only, in both arms,
//! noise photon in slot 2, ...) are again independent Poisson streams. The
//! engine draws their superposition: it jumps from one occupied gate to the
//! next with geometric gaps and picks the kind of each event from a table.
//! Dark counts are a second sparse stream per arm.
//!
//! [`simulate_gates_direct`] is the plain gate-by-gate version, kept as a
//! reference for the fast path.

use std::io::Write;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;

use crate::config::{Arm, ArmPair, ExperimentConfig};
use crate::detection::{accumulate_into, gated_detect, DetectorResponse, TIAHistogram};
use crate::error::{Error, Result};
use crate::model::rates::{arm_optics, joint_table, noise_slot_distribution, ArmOptics, PULSES_PER_GATE};
use crate::model::{effective_means, PhotonMeans};
use crate::montecarlo::rng::{RngStream, DEFAULT_SEED};
use crate::montecarlo::sampling::{route_noise_photon, sample_pair_count, PairOutcome, PairOutcomeSampler};

pub const DEFAULT_BATCH_GATES: u64 = 100_000;

/// Counters of one or more merged batches.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GateBatchResult {
    pub n_gates: u64,
    /// Gates whose whole TIA window lies inside their batch; only these act as starts.
    pub window_gates: u64,
    pub singles_s: u64,
    pub singles_i: u64,
    /// Gates where both detectors clicked.
    pub slot2_coincidences: u64,
    pub histogram: TIAHistogram,
}

impl GateBatchResult {
    pub fn empty(window: usize) -> Self {
        Self {
            n_gates: 0,
            window_gates: 0,
            singles_s: 0,
            singles_i: 0,
            slot2_coincidences: 0,
            histogram: TIAHistogram::new(window),
        }
    }

    pub fn merge(&mut self, other: &GateBatchResult) -> Result<()> {
        self.histogram.merge(&other.histogram)?;
        self.n_gates += other.n_gates;
        self.window_gates += other.window_gates;
        self.singles_s += other.singles_s;
        self.singles_i += other.singles_i;
        self.slot2_coincidences += other.slot2_coincidences;
        Ok(())
    }

    pub fn singles(&self, arm: Arm) -> u64 {
        match arm {
            Arm::Signal => self.singles_s,
            Arm::Idler => self.singles_i,
        }
    }

    pub fn singles_probability(&self, arm: Arm) -> f64 {
        self.singles(arm) as f64 / self.n_gates as f64
    }

    /// Same-gate coincidences per gate.
    pub fn coincidence_probability(&self) -> f64 {
        self.slot2_coincidences as f64 / self.n_gates as f64
    }
}

/// Seed and batching of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimOptions {
    pub seed: u64,
    pub batch_gates: u64,
    /// Added to the batch index to form the stream id.
    pub stream_offset: u64,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self { seed: DEFAULT_SEED, batch_gates: DEFAULT_BATCH_GATES, stream_offset: 0 }
    }
}

impl SimOptions {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }
}

/// Where a detected photon came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Pair,
    Noise,
    Dark,
}

impl Origin {
    pub fn as_str(self) -> &'static str {
        match self {
            Origin::Pair => "pair",
            Origin::Noise => "noise",
            Origin::Dark => "dark",
        }
    }
}

/// One line of the debugging dump.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EventRecord {
    pub gate_index: u64,
    pub arm: Arm,
    pub slot: u8,
    pub origin: Origin,
}

pub const EVENT_DUMP_HEADER: &str = "gate_index,arm,slot,origin";

/// One kind of detected event: which arm(s) click, in which slot, and why.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct EventCell {
    signal: Option<u8>,
    idler: Option<u8>,
    origin: Origin,
}

/// Precomputed per-configuration event table.
///
/// Every photon is thinned by transmittance, efficiency and gate collection
/// up front, so each table cell is an independent Poisson stream of
/// detections and a simulated event always produces at least one click.
#[derive(Debug, Clone)]
pub struct GatePlan {
    cells: Vec<EventCell>,
    cdf: Vec<f64>,
    total_rate: f64,
    dark: ArmPair<f64>,
    window: usize,
}

impl GatePlan {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let means = effective_means(&cfg.source, cfg.pump.relative_power)?;
        let optics = arm_optics(cfg);
        let theta_i = cfg.interferometers.as_ref().map_or(0.0, |ifs| ifs.idler.phase_rad);
        let sampler = PairOutcomeSampler::new(&joint_table(cfg, theta_i)?)?;
        Ok(Self::from_parts(&means, &optics, &sampler, cfg.interferometers.is_some(), cfg.tia_window))
    }

    fn from_parts(
        means: &PhotonMeans,
        optics: &ArmPair<ArmOptics>,
        sampler: &PairOutcomeSampler,
        with_interferometer: bool,
        window: usize,
    ) -> Self {
        let detect = |arm: Arm, slot: Option<u8>| -> [(Option<u8>, f64); 2] {
            let o = optics.get(arm);
            let p = slot.map_or(0.0, |j| o.alpha() * o.slot_collection[j as usize - 1]);
            [(slot, p), (None, 1.0 - p)]
        };
        let slots = [Some(1u8), Some(2), Some(3), None];
        let mut pair = std::collections::BTreeMap::<(u8, u8), f64>::new();
        for s in slots {
            for i in slots {
                let routed = sampler.probability(PairOutcome { signal: s, idler: i });
                for (ds, ps) in detect(Arm::Signal, s) {
                    for (di, pi) in detect(Arm::Idler, i) {
                        if ds.is_some() || di.is_some() {
                            *pair.entry((ds.unwrap_or(0), di.unwrap_or(0))).or_default() += routed * ps * pi;
                        }
                    }
                }
            }
        }
        let mut weighted: Vec<(EventCell, f64)> = pair
            .into_iter()
            .map(|((s, i), p)| {
                let cell = EventCell { signal: (s > 0).then_some(s), idler: (i > 0).then_some(i), origin: Origin::Pair };
                (cell, PULSES_PER_GATE * means.mu_c * p)
            })
            .collect();
        let noise_slots = noise_slot_distribution(with_interferometer);
        for (arm, mean) in [(Arm::Signal, means.mu_sn), (Arm::Idler, means.mu_in)] {
            let o = optics.get(arm);
            for (j, share) in noise_slots.iter().enumerate() {
                let slot = Some(j as u8 + 1);
                let cell = match arm {
                    Arm::Signal => EventCell { signal: slot, idler: None, origin: Origin::Noise },
                    Arm::Idler => EventCell { signal: None, idler: slot, origin: Origin::Noise },
                };
                weighted.push((cell, PULSES_PER_GATE * mean * share * o.alpha() * o.slot_collection[j]));
            }
        }
        weighted.retain(|(_, rate)| *rate > 0.0);
        let total_rate: f64 = weighted.iter().map(|(_, r)| r).sum();
        let mut acc = 0.0;
        let cdf = weighted
            .iter()
            .map(|(_, r)| {
                acc += r / total_rate;
                acc
            })
            .collect();
        Self {
            cells: weighted.into_iter().map(|(c, _)| c).collect(),
            cdf,
            total_rate,
            dark: optics.map(|_, o| o.dark),
            window,
        }
    }

    /// Mean number of detection events per gate, darks excluded.
    pub fn event_rate(&self) -> f64 {
        self.total_rate
    }

    pub fn window(&self) -> usize {
        self.window
    }

    fn sample_cell(&self, rng: &mut ChaCha8Rng) -> EventCell {
        let u: f64 = rng.random();
        let idx = self.cdf.partition_point(|&c| c <= u).min(self.cells.len() - 1);
        self.cells[idx]
    }
}

/// Number of empty gates before the next occupied one.
fn geometric_gap(rate: f64, rng: &mut ChaCha8Rng) -> u64 {
    let e: f64 = Exp1.sample(rng);
    let gap = e / rate;
    if gap >= u64::MAX as f64 {
        u64::MAX
    } else {
        gap as u64
    }
}

/// Poisson(λ) conditioned on at least one event.
fn zero_truncated_poisson(lambda: f64, rng: &mut ChaCha8Rng) -> u32 {
    let mut target = rng.random::<f64>() * -(-lambda).exp_m1();
    let mut k = 1u32;
    let mut p = lambda * (-lambda).exp();
    while target >= p && k < 10_000 {
        target -= p;
        k += 1;
        p *= lambda / k as f64;
    }
    k
}

/// Indices in `0..n` of a Bernoulli(p) stream.
fn bernoulli_gates(p: f64, n: u64, rng: &mut ChaCha8Rng) -> Vec<u64> {
    if p <= 0.0 {
        return Vec::new();
    }
    if p >= 1.0 {
        return (0..n).collect();
    }
    let rate = -(-p).ln_1p();
    let mut out = Vec::with_capacity((n as f64 * p * 1.2) as usize + 4);
    let mut g = geometric_gap(rate, rng);
    while g < n {
        out.push(g);
        g = g.saturating_add(1).saturating_add(geometric_gap(rate, rng));
    }
    out
}

fn sorted_union(a: &[u64], b: &[u64]) -> Vec<u64> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

fn intersection_count(a: &[u64], b: &[u64]) -> u64 {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// Singles, same-gate coincidences and the TIA histogram from click streams.
fn tally(n: u64, window: usize, signal: &[u64], idler: &[u64]) -> GateBatchResult {
    let k = window as u64;
    let mut result = GateBatchResult::empty(window);
    result.n_gates = n;
    result.singles_s = signal.len() as u64;
    result.singles_i = idler.len() as u64;
    result.slot2_coincidences = intersection_count(signal, idler);
    if n > 2 * k {
        result.window_gates = n - 2 * k;
        let lo = signal.partition_point(|&g| g < k);
        let hi = signal.partition_point(|&g| g < n - k);
        accumulate_into(&mut result.histogram, &signal[lo..hi], idler);
    }
    result
}

fn simulate_batch(
    plan: &GatePlan,
    n: u64,
    rng: &mut ChaCha8Rng,
    mut dump: Option<&mut Vec<EventRecord>>,
) -> GateBatchResult {
    let mut clicks = ArmPair::new(Vec::new(), Vec::new());
    if plan.total_rate > 0.0 {
        let mut g = geometric_gap(plan.total_rate, rng);
        while g < n {
            let (mut s, mut i) = (false, false);
            for _ in 0..zero_truncated_poisson(plan.total_rate, rng) {
                let cell = plan.sample_cell(rng);
                s |= cell.signal.is_some();
                i |= cell.idler.is_some();
                if let Some(d) = dump.as_deref_mut() {
                    for (arm, slot) in [(Arm::Signal, cell.signal), (Arm::Idler, cell.idler)] {
                        if let Some(slot) = slot {
                            d.push(EventRecord { gate_index: g, arm, slot, origin: cell.origin });
                        }
                    }
                }
            }
            if s {
                clicks.signal.push(g);
            }
            if i {
                clicks.idler.push(g);
            }
            g = g.saturating_add(1).saturating_add(geometric_gap(plan.total_rate, rng));
        }
    }

    let mut streams = Vec::with_capacity(2);
    for arm in Arm::BOTH {
        let darks = bernoulli_gates(*plan.dark.get(arm), n, rng);
        if let Some(d) = dump.as_deref_mut() {
            d.extend(darks.iter().map(|&gate_index| EventRecord { gate_index, arm, slot: 2, origin: Origin::Dark }));
        }
        streams.push(sorted_union(clicks.get(arm), &darks));
    }
    tally(n, plan.window, &streams[0], &streams[1])
}

fn batch_sizes(n_gates: u64, batch: u64) -> impl Iterator<Item = (u64, u64)> {
    let n_batches = n_gates.div_ceil(batch);
    (0..n_batches).map(move |b| (b, batch.min(n_gates - b * batch)))
}

fn check_run(n_gates: u64, opts: &SimOptions) -> Result<()> {
    if n_gates == 0 {
        return Err(Error::InvalidParameter { name: "n_gates", reason: "must be positive".into() });
    }
    if opts.batch_gates == 0 {
        return Err(Error::InvalidParameter { name: "batch_gates", reason: "must be positive".into() });
    }
    Ok(())
}

/// Runs a prepared plan over `n_gates` gates in parallel batches.
pub fn simulate_plan(plan: &GatePlan, n_gates: u64, opts: &SimOptions) -> Result<GateBatchResult> {
    check_run(n_gates, opts)?;
    let batches: Vec<(u64, u64)> = batch_sizes(n_gates, opts.batch_gates).collect();
    let result = batches
        .par_iter()
        .map(|&(b, n)| {
            let mut rng = RngStream::new(opts.seed, opts.stream_offset + b).rng();
            simulate_batch(plan, n, &mut rng, None)
        })
        .reduce(
            || GateBatchResult::empty(plan.window),
            |mut a, b| {
                a.merge(&b).expect("batches share one window");
                a
            },
        );
    Ok(result)
}

/// Simulates `n_gates` gates of the configuration as it stands (idler phase included).
pub fn simulate_gates(cfg: &ExperimentConfig, n_gates: u64, seed: u64) -> Result<GateBatchResult> {
    simulate_with(cfg, n_gates, &SimOptions::with_seed(seed))
}

pub fn simulate_with(cfg: &ExperimentConfig, n_gates: u64, opts: &SimOptions) -> Result<GateBatchResult> {
    simulate_plan(&GatePlan::new(cfg)?, n_gates, opts)
}

/// Sequential run that also writes every detected photon and dark count as
/// `gate_index,arm,slot,origin`. Several lines may share a gate and arm;
/// the detector still registers a single click there.
pub fn simulate_with_dump<W: Write>(
    cfg: &ExperimentConfig,
    n_gates: u64,
    opts: &SimOptions,
    out: &mut W,
) -> Result<GateBatchResult> {
    check_run(n_gates, opts)?;
    let plan = GatePlan::new(cfg)?;
    writeln!(out, "{EVENT_DUMP_HEADER}")?;
    let mut total = GateBatchResult::empty(plan.window);
    for (b, n) in batch_sizes(n_gates, opts.batch_gates) {
        let mut rng = RngStream::new(opts.seed, opts.stream_offset + b).rng();
        let mut records = Vec::new();
        total.merge(&simulate_batch(&plan, n, &mut rng, Some(&mut records)))?;
        records.sort_by_key(|r| (r.gate_index, r.arm == Arm::Idler));
        let offset = b * opts.batch_gates;
        for r in records {
            writeln!(out, "{},{},{},{}", offset + r.gate_index, r.arm.name(), r.slot, r.origin.as_str())?;
        }
    }
    Ok(total)
}

/// Gate-by-gate reference simulation: Poisson pair and noise numbers per
/// double pulse, joint routing of each pair, channel loss per photon and a
/// gated detector per arm. Single stream, slow; for cross-checks.
pub fn simulate_gates_direct(cfg: &ExperimentConfig, n_gates: u64, seed: u64) -> Result<GateBatchResult> {
    check_run(n_gates, &SimOptions::default())?;
    cfg.validate()?;
    let means = effective_means(&cfg.source, cfg.pump.relative_power)?;
    let optics = arm_optics(cfg);
    let theta_i = cfg.interferometers.as_ref().map_or(0.0, |ifs| ifs.idler.phase_rad);
    let sampler = PairOutcomeSampler::new(&joint_table(cfg, theta_i)?)?;
    let with_interferometer = cfg.interferometers.is_some();
    let responses = ArmPair::new(
        DetectorResponse::from_config(&cfg.detectors.signal, &optics.signal.penalty),
        DetectorResponse::from_config(&cfg.detectors.idler, &optics.idler.penalty),
    );
    let transmit = optics.map(|_, o| o.transmittance);
    let noise_means = ArmPair::new(PULSES_PER_GATE * means.mu_sn, PULSES_PER_GATE * means.mu_in);

    let mut rng = RngStream::new(seed, 0).rng();
    let mut clicks = ArmPair::new(Vec::new(), Vec::new());
    let mut arrivals = ArmPair::new(Vec::new(), Vec::new());
    for g in 0..n_gates {
        arrivals.signal.clear();
        arrivals.idler.clear();
        for _ in 0..sample_pair_count(PULSES_PER_GATE * means.mu_c, &mut rng)? {
            let outcome = sampler.sample(&mut rng);
            for (arm, slot) in [(Arm::Signal, outcome.signal), (Arm::Idler, outcome.idler)] {
                if let Some(slot) = slot {
                    if rng.random::<f64>() < *transmit.get(arm) {
                        arrivals.get_mut(arm).push(slot);
                    }
                }
            }
        }
        for arm in Arm::BOTH {
            for _ in 0..sample_pair_count(*noise_means.get(arm), &mut rng)? {
                if let Some(slot) = route_noise_photon(with_interferometer, &mut rng) {
                    if rng.random::<f64>() < *transmit.get(arm) {
                        arrivals.get_mut(arm).push(slot);
                    }
                }
            }
            if gated_detect(arrivals.get(arm), responses.get(arm), &mut rng).is_some() {
                clicks.get_mut(arm).push(g);
            }
        }
    }
    Ok(tally(n_gates, cfg.tia_window, &clicks.signal, &clicks.idler))
}

#[cfg(test)]
mod tests {
    use super::*;

    const REFERENCE: &str = include_str!("../../../../configs/reference.ini");

    fn reference() -> ExperimentConfig {
        ExperimentConfig::from_ini_str(REFERENCE).unwrap()
    }

    #[test]
    fn truncated_poisson_mean() {
        let mut rng = RngStream::new(1, 0).rng();
        let lambda = 0.3;
        let n = 200_000;
        let mean = (0..n).map(|_| zero_truncated_poisson(lambda, &mut rng) as f64).sum::<f64>() / n as f64;
        let expected = lambda / -(-lambda).exp_m1();
        assert!((mean - expected).abs() < 0.01, "{mean} vs {expected}");
    }

    #[test]
    fn bernoulli_stream_rate() {
        let mut rng = RngStream::new(2, 0).rng();
        let n = 10_000_000;
        let hits = bernoulli_gates(1e-3, n, &mut rng);
        let expected = n as f64 * 1e-3;
        assert!((hits.len() as f64 - expected).abs() < 3.0 * expected.sqrt());
        assert!(hits.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(bernoulli_gates(1.0, 5, &mut rng), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn union_and_intersection() {
        assert_eq!(sorted_union(&[1, 3, 5], &[2, 3, 9]), vec![1, 2, 3, 5, 9]);
        assert_eq!(intersection_count(&[1, 3, 5], &[2, 3, 5]), 2);
    }

    #[test]
    fn blind_detectors_count_nothing() {
        let mut cfg = reference();
        for arm in Arm::BOTH {
            cfg.detectors.get_mut(arm).efficiency = 0.0;
            cfg.detectors.get_mut(arm).dark_count_per_gate = 0.0;
        }
        let r = simulate_gates(&cfg, 1_000_000, 1).unwrap();
        assert_eq!((r.singles_s, r.singles_i, r.slot2_coincidences), (0, 0, 0));
        assert_eq!(r.histogram.counts.iter().sum::<u64>(), 0);
    }

    #[test]
    fn zero_gates_is_rejected() {
        assert!(simulate_gates(&reference(), 0, 1).is_err());
    }

    #[test]
    fn delay_mismatch_is_rejected() {
        let mut cfg = reference();
        cfg.interferometers.as_mut().unwrap().idler.delay_ns = 1.5;
        assert!(matches!(simulate_gates(&cfg, 10, 1), Err(Error::Inconsistent(_))));
    }

    #[test]
    fn batch_partition_is_deterministic() {
        let cfg = reference();
        let opts = SimOptions { seed: 9, batch_gates: 50_000, stream_offset: 0 };
        let a = simulate_with(&cfg, 400_000, &opts).unwrap();
        let b = simulate_with(&cfg, 400_000, &opts).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.n_gates, 400_000);
        assert_eq!(a.window_gates, 400_000 - 8 * 6);
    }

    #[test]
    fn dump_matches_parallel_run() {
        let cfg = reference();
        let opts = SimOptions { seed: 4, batch_gates: 20_000, stream_offset: 0 };
        let mut buf = Vec::new();
        let dumped = simulate_with_dump(&cfg, 60_000, &opts, &mut buf).unwrap();
        assert_eq!(dumped, simulate_with(&cfg, 60_000, &opts).unwrap());
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(EVENT_DUMP_HEADER));
        let mut gates = std::collections::BTreeSet::new();
        for line in lines {
            let f: Vec<&str> = line.split(',').collect();
            assert_eq!(f.len(), 4);
            assert!(matches!(f[3], "pair" | "noise" | "dark"));
            if f[1] == "signal" {
                gates.insert(f[0].parse::<u64>().unwrap());
            }
        }
        assert_eq!(gates.len() as u64, dumped.singles_s);
    }
}
