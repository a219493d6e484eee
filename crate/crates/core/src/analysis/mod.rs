//! Fringe fitting, accidental subtraction and pump-power sweeps.

pub mod fringe;
pub mod lm;
pub mod sweep;

pub use fringe::{fit_fringe, subtract_accidentals, FitResult, FringeModel, FringePoint, FringeScan};
pub use sweep::{
    fit_noise_coefficients, sweep_csv, sweep_mu, sweep_mu_mc, NoiseFit, NoiseFitOptions, SweepObservation, SweepRow,
};
