//! Chromatic-dispersion broadening and what the detector gate collects.

use statrs::function::erf::erf;

/// Centre wavelength used to convert a channel bandwidth into nanometres.
pub const REFERENCE_WAVELENGTH_NM: f64 = 1551.0;

const SPEED_OF_LIGHT_M_PER_S: f64 = 299_792_458.0;

/// Gaussian FWHM to standard deviation.
const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionPenalty {
    /// Dispersive spread D·L·Δλ in ps.
    pub spread_ps: f64,
    /// FWHM after propagation in ps.
    pub broadened_width_ps: f64,
    /// Fraction of a pulse centred in the gate that falls inside it.
    pub gate_collection: f64,
    /// Fraction of a pulse one bin away that leaks into the gate.
    pub adjacent_leakage: f64,
    /// Broadening exceeds half a bin: neighbouring bins overlap.
    pub overlap: bool,
}

/// Converts a bandwidth in GHz into nm at [`REFERENCE_WAVELENGTH_NM`].
pub fn bandwidth_nm(bandwidth_ghz: f64) -> f64 {
    let lambda_m = REFERENCE_WAVELENGTH_NM * 1e-9;
    lambda_m * lambda_m * bandwidth_ghz * 1e9 / SPEED_OF_LIGHT_M_PER_S * 1e9
}

/// Inverse of [`bandwidth_nm`].
pub fn bandwidth_ghz(bandwidth_nm: f64) -> f64 {
    let lambda_m = REFERENCE_WAVELENGTH_NM * 1e-9;
    bandwidth_nm * 1e-9 * SPEED_OF_LIGHT_M_PER_S / (lambda_m * lambda_m) * 1e-9
}

fn gaussian_mass(sigma_ps: f64, lo_ps: f64, hi_ps: f64) -> f64 {
    let scale = sigma_ps * std::f64::consts::SQRT_2;
    0.5 * (erf(hi_ps / scale) - erf(lo_ps / scale))
}

pub fn dispersion_penalty(
    bandwidth_ghz: f64,
    dispersion_ps_per_nm_km: f64,
    length_km: f64,
    pulse_width_ps: f64,
    gate_width_ns: f64,
    bin_separation_ns: f64,
) -> DispersionPenalty {
    let spread_ps = (dispersion_ps_per_nm_km * length_km * bandwidth_nm(bandwidth_ghz)).abs();
    let broadened_width_ps = pulse_width_ps.hypot(spread_ps);
    let sigma = broadened_width_ps / FWHM_PER_SIGMA;
    let half_gate = gate_width_ns * 1e3 / 2.0;
    let bin = bin_separation_ns * 1e3;
    DispersionPenalty {
        spread_ps,
        broadened_width_ps,
        gate_collection: gaussian_mass(sigma, -half_gate, half_gate),
        adjacent_leakage: gaussian_mass(sigma, bin - half_gate, bin + half_gate),
        overlap: broadened_width_ps > bin / 2.0,
    }
}
