//! Batch experiments: config files, scenario generation, sweeps and CSV
//! output.

pub mod config;
pub mod output;
pub mod run;

pub use config::{ExperimentConfig, GeneratorConfig};
pub use output::{emit_csv, emit_dispersion, emit_plot_data, parse_csv, plot_points, CSV_HEADER};
pub use run::{
    build_scenario, count_for, run_experiment, run_experiment_records, run_scenario, sweep_budget,
    sweep_samples, Dispersion, ResultRow, RowStatus, RunRecord, Scenario,
};
