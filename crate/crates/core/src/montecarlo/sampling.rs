//! Photon-number and routing draws.

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{check_non_negative, Error, Result};
use crate::model::{AmplitudeTable, Port, SLOTS};

/// Tolerance on the total probability of a joint table.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// Number of pairs (or noise photons) in one double pulse.
pub fn sample_pair_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> Result<u64> {
    check_non_negative("mean", mean)?;
    if mean == 0.0 {
        return Ok(0);
    }
    let dist = Poisson::new(mean).map_err(|e| Error::InvalidParameter { name: "mean", reason: e.to_string() })?;
    Ok(dist.sample(rng) as u64)
}

/// Where each photon of a pair ends up: a slot in the used port, or lost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PairOutcome {
    pub signal: Option<u8>,
    pub idler: Option<u8>,
}

const OUTCOMES: usize = (SLOTS + 1) * (SLOTS + 1);

fn outcome_at(index: usize) -> PairOutcome {
    let slot = |i: usize| if i == SLOTS { None } else { Some(i as u8 + 1) };
    PairOutcome { signal: slot(index / (SLOTS + 1)), idler: slot(index % (SLOTS + 1)) }
}

/// Inverse-CDF sampler over the sixteen joint outcomes of a table.
#[derive(Debug, Clone)]
pub struct PairOutcomeSampler {
    cdf: [f64; OUTCOMES],
}

impl PairOutcomeSampler {
    pub fn new(table: &AmplitudeTable) -> Result<Self> {
        let mut probs = [0.0; OUTCOMES];
        for (ps, si) in [(Port::Used, 0), (Port::Unused, SLOTS)] {
            for (pi, ii) in [(Port::Used, 0), (Port::Unused, SLOTS)] {
                for j in 0..SLOTS {
                    for k in 0..SLOTS {
                        let s = if si == 0 { j } else { SLOTS };
                        let i = if ii == 0 { k } else { SLOTS };
                        probs[s * (SLOTS + 1) + i] += table.port_probability(ps, pi, j + 1, k + 1);
                    }
                }
            }
        }
        let total: f64 = probs.iter().sum();
        if !((total - 1.0).abs() <= NORMALIZATION_TOLERANCE) || probs.iter().any(|p| *p < -1e-15) {
            return Err(Error::Unnormalized(total));
        }
        let mut cdf = [0.0; OUTCOMES];
        let mut acc = 0.0;
        for (c, p) in cdf.iter_mut().zip(probs) {
            acc += p.max(0.0) / total;
            *c = acc;
        }
        cdf[OUTCOMES - 1] = 1.0;
        Ok(Self { cdf })
    }

    pub fn probability(&self, outcome: PairOutcome) -> f64 {
        let idx = (0..OUTCOMES).find(|&i| outcome_at(i) == outcome).expect("valid outcome");
        self.cdf[idx] - if idx == 0 { 0.0 } else { self.cdf[idx - 1] }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> PairOutcome {
        let u: f64 = rng.random();
        let idx = self.cdf.iter().position(|&c| u < c).unwrap_or(OUTCOMES - 1);
        outcome_at(idx)
    }
}

/// One joint draw. Prefer [`PairOutcomeSampler`] for repeated draws.
pub fn sample_pair_outcome<R: Rng + ?Sized>(table: &AmplitudeTable, rng: &mut R) -> Result<PairOutcome> {
    Ok(PairOutcomeSampler::new(table)?.sample(rng))
}

/// Routes one noise photon: uniform bin, then (with an interferometer) a
/// random port and a random path. `None` when it leaves the unused port.
pub fn route_noise_photon<R: Rng + ?Sized>(with_interferometer: bool, rng: &mut R) -> Option<u8> {
    let bin = 1 + rng.random_range(0..2u8);
    if !with_interferometer {
        return Some(bin);
    }
    let bits = rng.random_range(0..4u8);
    if bits & 1 == 1 {
        None
    } else {
        Some(bin + (bits >> 1))
    }
}

/// Noise photons of one double pulse, as used-port slots.
pub fn sample_noise<R: Rng + ?Sized>(mean: f64, with_interferometer: bool, rng: &mut R) -> Result<Vec<u8>> {
    let n = sample_pair_count(mean, rng)?;
    Ok((0..n).filter_map(|_| route_noise_photon(with_interferometer, rng)).collect())
}
