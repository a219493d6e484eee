//! Joint signal/idler slot amplitudes after the delay interferometers.
//!
//! The source emits `(|1,1⟩ + e^{iφ}|2,2⟩)/√2`. Each delay interferometer maps
//! an input bin `k` onto two output ports:
//!
//! ```text
//! used   port: (|k⟩ + e^{iθ}|k+1⟩) / 2
//! unused port: (|k⟩ - e^{iθ}|k+1⟩) / 2
//! ```
//!
//! which is an isometry, so the table over both ports always sums to one. Only
//! the (used, used) block reaches the detectors; everything else is
//! `loss_weight`.
//!
//! Finite extinction is modelled as partial coherence of each interferometer:
//! with a dark-port ratio ε the single-photon fringe contrast is
//! `γ = (1 - ε)/(1 + ε)`, and the only two-path cell, slot (2,2), keeps its
//! interference term with weight `γ_s γ_i`.

use num_complex::Complex64;

use crate::error::{check_finite, Error, Result};

pub const SLOTS: usize = 3;

/// Output port of a delay interferometer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Port {
    Used = 0,
    Unused = 1,
}

type Grid<T> = [[[[T; SLOTS]; SLOTS]; 2]; 2];

/// Joint output distribution of one photon pair.
///
/// Slots are 1-based in the public accessors (1, 2, 3).
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeTable {
    coherent: Grid<Complex64>,
    path_intensity: Grid<f64>,
    coherence: f64,
}

/// Contrast of a single interferometer with the given dark-port ratio in dB.
pub fn coherence_from_extinction(extinction_db: f64) -> Result<f64> {
    if extinction_db.is_nan() || extinction_db >= 0.0 {
        return Err(Error::InvalidParameter {
            name: "extinction_ratio_db",
            reason: format!("{extinction_db} must be < 0 dB"),
        });
    }
    let ratio = 10f64.powf(extinction_db / 10.0);
    Ok((1.0 - ratio) / (1.0 + ratio))
}

/// One term of an interferometer output: (port, output slot index 0..3, amplitude).
type ArmTerm = (usize, usize, Complex64);

fn interferometer_terms(bin: usize, theta: f64) -> [ArmTerm; 4] {
    let late = Complex64::from_polar(0.5, theta);
    let early = Complex64::new(0.5, 0.0);
    [
        (Port::Used as usize, bin, early),
        (Port::Used as usize, bin + 1, late),
        (Port::Unused as usize, bin, early),
        (Port::Unused as usize, bin + 1, -late),
    ]
}

fn expand<const N: usize>(
    phi: f64,
    terms: impl Fn(usize, usize) -> [ArmTerm; N],
    coherence: f64,
) -> AmplitudeTable {
    let mut coherent = [[[[Complex64::new(0.0, 0.0); SLOTS]; SLOTS]; 2]; 2];
    let mut path_intensity = [[[[0.0; SLOTS]; SLOTS]; 2]; 2];
    let norm = std::f64::consts::FRAC_1_SQRT_2;
    let bins = [(0usize, Complex64::new(norm, 0.0)), (1usize, Complex64::from_polar(norm, phi))];
    for (bin, weight) in bins {
        for (ps, js, a_s) in terms(0, bin) {
            for (pi, ki, a_i) in terms(1, bin) {
                let amp = weight * a_s * a_i;
                coherent[ps][pi][js][ki] += amp;
                path_intensity[ps][pi][js][ki] += amp.norm_sqr();
            }
        }
    }
    AmplitudeTable { coherent, path_intensity, coherence }
}

/// Expands the entangled state through both interferometers.
///
/// `ext_s`, `ext_i` are extinction ratios in dB (negative; `-inf` is ideal).
pub fn build_joint_amplitudes(phi: f64, theta_s: f64, theta_i: f64, ext_s: f64, ext_i: f64) -> Result<AmplitudeTable> {
    check_finite("phi", phi)?;
    check_finite("theta_s", theta_s)?;
    check_finite("theta_i", theta_i)?;
    let coherence = coherence_from_extinction(ext_s)? * coherence_from_extinction(ext_i)?;
    let thetas = [theta_s, theta_i];
    Ok(expand(phi, |arm, bin| interferometer_terms(bin, thetas[arm]), coherence))
}

/// Table for the bare source with no interferometers: each photon stays in
/// its emission bin and always leaves through the used port.
pub fn bypass_table(phi: f64) -> Result<AmplitudeTable> {
    check_finite("phi", phi)?;
    Ok(expand(phi, |_, bin| [(Port::Used as usize, bin, Complex64::new(1.0, 0.0))], 1.0))
}

impl AmplitudeTable {
    fn index(slot: usize) -> usize {
        assert!((1..=SLOTS).contains(&slot), "slot {slot} outside 1..=3");
        slot - 1
    }

    /// Coherent amplitude A(j,k) for both photons in the used ports.
    pub fn amplitude(&self, j: usize, k: usize) -> Complex64 {
        self.coherent[0][0][Self::index(j)][Self::index(k)]
    }

    /// Product of the two interferometer coherences.
    pub fn coherence(&self) -> f64 {
        self.coherence
    }

    pub fn port_probability(&self, signal: Port, idler: Port, j: usize, k: usize) -> f64 {
        let (ps, pi, j, k) = (signal as usize, idler as usize, Self::index(j), Self::index(k));
        let incoherent = self.path_intensity[ps][pi][j][k];
        incoherent + self.coherence * (self.coherent[ps][pi][j][k].norm_sqr() - incoherent)
    }

    /// Probability that the signal lands in slot j and the idler in slot k,
    /// both in the used ports.
    pub fn probability(&self, j: usize, k: usize) -> f64 {
        self.port_probability(Port::Used, Port::Used, j, k)
    }

    /// Mass routed to an unused port in at least one arm.
    pub fn loss_weight(&self) -> f64 {
        let mut total = 0.0;
        for (ps, pi) in [(Port::Used, Port::Unused), (Port::Unused, Port::Used), (Port::Unused, Port::Unused)] {
            for j in 1..=SLOTS {
                for k in 1..=SLOTS {
                    total += self.port_probability(ps, pi, j, k);
                }
            }
        }
        total
    }

    pub fn detected_weight(&self) -> f64 {
        (1..=SLOTS).flat_map(|j| (1..=SLOTS).map(move |k| (j, k))).map(|(j, k)| self.probability(j, k)).sum()
    }

    /// Slot distribution of the signal photon in its used port, whatever the idler does.
    pub fn signal_marginal(&self) -> [f64; SLOTS] {
        let mut out = [0.0; SLOTS];
        for (j, slot) in out.iter_mut().enumerate() {
            for pi in [Port::Used, Port::Unused] {
                for k in 1..=SLOTS {
                    *slot += self.port_probability(Port::Used, pi, j + 1, k);
                }
            }
        }
        out
    }

    pub fn idler_marginal(&self) -> [f64; SLOTS] {
        let mut out = [0.0; SLOTS];
        for (k, slot) in out.iter_mut().enumerate() {
            for ps in [Port::Used, Port::Unused] {
                for j in 1..=SLOTS {
                    *slot += self.port_probability(ps, Port::Used, j, k + 1);
                }
            }
        }
        out
    }
}

/// Post-selected coincidence probability in the second slot, |A(2,2)|²
/// (reduced by partial coherence when the extinction is finite).
pub fn slot2_coincidence_probability(table: &AmplitudeTable) -> f64 {
    table.probability(2, 2)
}
