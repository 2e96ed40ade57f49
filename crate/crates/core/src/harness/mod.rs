//! Scenario generation, Monte Carlo campaigns and result files.

pub mod campaign;
pub mod emit;
pub mod experiments;
pub mod scenario;

pub use campaign::{run_campaign, run_trial, CampaignResult, Metric, ResultRow, TrialResult};
pub use emit::{read_rows, resolve_output, write_rows, OutputFormat, OUT_DIR_ENV};
pub use scenario::{generate_topology, Scenario, ScenarioConfig, Topology};

use std::path::Path;

use crate::error::Result;

/// Writes campaign rows with the fixed column order.
pub fn emit_results(rows: &[ResultRow], format: OutputFormat, path: &Path) -> Result<()> {
    write_rows(rows, &campaign::RESULT_COLUMNS, format, path)
}
