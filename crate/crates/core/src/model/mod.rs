//! Closed-form physics of the source, interferometers and detectors.

pub mod amplitude;
pub mod dispersion;
pub mod rates;
pub mod source;

pub use amplitude::{build_joint_amplitudes, bypass_table, slot2_coincidence_probability, AmplitudeTable, Port, SLOTS};
pub use dispersion::{dispersion_penalty, DispersionPenalty};
pub use rates::{
    coincidence_ratio, estimate_correlated_fraction, predict_rates, singles_rate, CorrelatedFraction,
    RatePrediction,
};
pub use source::{apply_polarizer, effective_means, pump_scaling, PhotonMeans};
