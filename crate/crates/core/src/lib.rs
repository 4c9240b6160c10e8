//! Deterministic discrete-time simulator of LTE downlink handover with
//! distributed mobility load balancing (MLB).
//!
//! Every sector runs its own MLB controller. When a sector runs short of
//! free PRBs it lowers the A3 hysteresis it advertises toward neighbours
//! that still have spare capacity, so cell-edge UEs hand over earlier and
//! the excess load moves out. Two adaptation rules are provided (`Mlb1`,
//! with a linear slope in the neighbour's free-resource ratio, and `Mlb2`,
//! a fixed halving) and compared against a plain A3 baseline.
//!
//! Module map:
//!
//! - [`radio`]: path loss, sector antenna pattern, RSRP and SINR.
//! - [`mobility`]: constant-speed random-direction UEs with wall reflection.
//! - [`handover`]: A3 entry condition, time-to-trigger and handover execution.
//! - [`mlb`]: overload detection and per-neighbour hysteresis rewriting.
//! - [`scheduler`]: MCS selection, round-robin PRB allocation, loss accounting.
//! - [`sim`], [`matrix`], [`export`]: tick loop, scenario matrices, CSV/SVG output.

pub mod config;
pub mod error;
pub mod export;
pub mod handover;
pub mod matrix;
pub mod mlb;
pub mod mobility;
pub mod radio;
pub mod rng;
pub mod scheduler;
pub mod sim;

pub use config::ScenarioConfig;
pub use error::{Error, Result};
pub use handover::{HandoverCause, HandoverEvent, HandoverParams, HysteresisTable};
pub use matrix::{run_matrix, AggregateCell, MatrixResult, MatrixRun};
pub use mlb::{Algorithm, BetaVariant, LoadReport, MlbPhase, MlbState, MlbThresholds};
pub use radio::{PathLossParams, Point, SectorConfig};
pub use sim::{run, KpiRecord, RunOptions, RunOutput, Simulation};
