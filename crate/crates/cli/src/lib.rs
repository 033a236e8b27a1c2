//! Command-line front end: configuration files, presets, batch runs and
//! SVG plots on top of `exciton-core`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod plot;
pub mod presets;
pub mod run;

pub use config::{parse_config, Assignments, ConfigError, ExperimentConfig};
pub use presets::{load_preset, preset_names};
pub use run::{run_experiment, simulate};
