//! Configuration, result persistence and command implementations behind
//! the `tensorconc` binary.

pub mod commands;
pub mod config;
pub mod format;
pub mod plot;
pub mod store;

pub use config::{load_config, parse_config, ConfigError, Payload, RateInput, RunConfig, SCHEMA_VERSION};
pub use store::{ResultStore, StoreError};
