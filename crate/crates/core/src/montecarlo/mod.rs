//! Seeded, batch-parallel Monte Carlo of the gated coincidence experiment.

pub mod engine;
pub mod rng;
pub mod sampling;
pub mod scan;

pub use engine::{
    simulate_gates, simulate_gates_direct, simulate_plan, simulate_with, simulate_with_dump, EventRecord,
    GateBatchResult, GatePlan, Origin, SimOptions, DEFAULT_BATCH_GATES,
};
pub use rng::{RngStream, DEFAULT_SEED};
pub use sampling::{sample_noise, sample_pair_count, sample_pair_outcome, PairOutcome, PairOutcomeSampler};
pub use scan::{evenly_spaced_phases, run_fringe_scan, FringeRun};
