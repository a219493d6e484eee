//! Photon-number means as a function of pump power, and the polarizer.

use crate::config::SourceConfig;
use crate::error::{check_non_negative, check_probability, Error, Result};

/// Mean photon numbers per pump pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhotonMeans {
    pub mu_c: f64,
    pub mu_sn: f64,
    pub mu_in: f64,
}

impl PhotonMeans {
    pub fn mu_s(&self) -> f64 {
        self.mu_c + self.mu_sn
    }

    pub fn mu_i(&self) -> f64 {
        self.mu_c + self.mu_in
    }
}

/// Power-law scaling of the correlated and noise means with relative pump power.
pub fn pump_scaling(power: f64, src: &SourceConfig) -> Result<PhotonMeans> {
    if power < 0.0 || power.is_nan() {
        return Err(Error::InvalidParameter { name: "relative_power", reason: format!("{power} must be >= 0") });
    }
    let noise = power.powf(src.noise_exponent);
    Ok(PhotonMeans {
        mu_c: src.mu_c_ref * power.powf(src.pair_exponent),
        mu_sn: src.mu_sn_ref * noise,
        mu_in: src.mu_in_ref * noise,
    })
}

/// Noise mean passed by the polarizer. Only the co-polarized part survives;
/// correlated pairs share the pump polarization and are never attenuated.
pub fn apply_polarizer(mu_noise: f64, polarized_fraction: f64, polarizer_on: bool) -> Result<f64> {
    check_non_negative("mu_noise", mu_noise)?;
    check_probability("polarized_fraction", polarized_fraction)?;
    Ok(if polarizer_on { mu_noise * polarized_fraction } else { mu_noise })
}

/// Means reaching the filters at the given power, after the polarizer.
pub fn effective_means(src: &SourceConfig, power: f64) -> Result<PhotonMeans> {
    let raw = pump_scaling(power, src)?;
    Ok(PhotonMeans {
        mu_c: raw.mu_c,
        mu_sn: apply_polarizer(raw.mu_sn, src.noise_polarized_fraction, src.polarizer)?,
        mu_in: apply_polarizer(raw.mu_in, src.noise_polarized_fraction, src.polarizer)?,
    })
}
