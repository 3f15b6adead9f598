//! Batch experiments: JSON configs in, CSV and JSON result tables out.

pub mod analysis;
mod config;
mod run;

pub use config::{
    snr_to_power, BudgetSpec, ChannelSpec, DesignSettings, ExperimentConfig, GrassmannSettings, OutputSpec,
    RegionSettings, Scheme,
};
pub use run::{config_hash, pack, run, Context, PackedCodebook, RegionResult, ResultRow, ResultTable, OUT_DIR_ENV};
