//! Configuration-driven sweeps over the Raman laser threshold magnetometer
//! model, with deterministic CSV/JSON output.

// NaN must fail these checks, so `!(x > y)` is intended.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod presets;
pub mod runner;
pub mod units;
pub mod verify;

pub use config::{parse_config, ExperimentConfig, PumpSpec, RawConfig, SweepKind};
pub use error::SweepError;
pub use presets::{preset, preset_json, PRESET_NAMES};
pub use runner::{
    default_workers, execute, plan, run, RunManifest, RunOutput, SweepOutcome, TaskState,
};
pub use verify::{verify, VerifyReport, DEFAULT_RTOL};
