//! Slotted simulation and analytic model of a full-duplex cognitive radio.
//!
//! A primary user (PU) follows a two-state Markov chain. A secondary user
//! (SU) detects it by energy detection. Under Listen-and-Talk (LAT) the SU
//! keeps sensing while it transmits, through its own residual
//! self-interference; under Listen-before-Talk (LBT) it stops to listen at
//! the start of every slot. The crate simulates both, plus a multi-SU
//! contention mode, and predicts the LAT/LBT metrics in closed form.
//!
//! ```
//! use fdcr::{analysis::analytic_metrics, engine::run_scenario, metrics::Metrics, ScenarioConfig};
//!
//! let cfg = ScenarioConfig::default().with_slots(20_000).with_tx_power(100.0);
//! let sim = Metrics::from_trace(&run_scenario(&cfg).unwrap()).unwrap();
//! let model = analytic_metrics(&cfg).unwrap();
//! assert!((sim.waste_ratio - model.waste_ratio).abs() < 0.05);
//! ```

pub mod analysis;
pub mod engine;
pub mod error;
pub mod metrics;
pub mod protocols;
pub mod radio;
pub mod sensing;

pub use engine::{run_many, run_scenario, DsaConfig, Protocol, ScenarioConfig, Trace};
pub use error::{Error, Result};
pub use metrics::{Case, DsaMetrics, Metrics};
