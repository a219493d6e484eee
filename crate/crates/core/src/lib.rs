//! Time-bin entangled photon pairs: analytic rate model, gate-level Monte Carlo,
//! gated detection with time-interval histograms, and fringe analysis.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod config;
pub mod detection;
pub mod error;
pub mod model;
pub mod montecarlo;

pub use config::{config_hash, Arm, ArmPair, ExperimentConfig, FiberSpool, GatedSlot};
pub use detection::{accumulate, gated_detect, ClickRecord, DetectorResponse, TIAHistogram};
pub use error::{Error, Result};
pub use model::{predict_rates, AmplitudeTable, RatePrediction};
pub use montecarlo::{run_fringe_scan, simulate_gates, GateBatchResult, RngStream};
