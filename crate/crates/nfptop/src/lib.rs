//! Batch front end for `nfptop-core`: named presets, TOML run
//! configurations, on-disk outputs and comparative studies.

pub mod config;
pub mod experiments;
pub mod output;
pub mod presets;

pub use config::{load_config, parse_config, ConfigError, RunConfig};
pub use presets::{presets, Preset};
