//! Closed-form prediction and experiment orchestration on top of the engine.

pub mod chain;
pub mod compare;
pub mod sweep;

pub use chain::{
    analytic_lbt_throughput, analytic_metrics, lat_case_probabilities, lat_sensing_probabilities,
    perfect_sensing_collision_floor, JointChain, SensingProbabilities,
};
pub use compare::{compare_lat_lbt, CompareRow, LbtPoint, DEFAULT_TAUS};
pub use sweep::{
    default_power_grid, find_local_optimum, interior_maxima, log_grid, power_sweep,
    PowerSweepResult, Smoothing, SweepPoint,
};
