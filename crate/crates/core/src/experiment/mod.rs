//! Sweep orchestration, result files and fronthaul accounting.

mod config;
mod fronthaul;
pub mod oracle;
mod output;
mod runner;
pub mod stats;

pub use config::{ExperimentConfig, LinkDirection, OutputConfig, Profile, SweepAxis, SweepConfig};
pub use fronthaul::{fronthaul_load, FronthaulLoad};
pub use output::{
    emit_results, format_decimal, summarize, write_plot_data, write_results_csv, OutputPaths,
    SummaryEntry, CSV_HEADER,
};
pub use runner::{
    run_experiment, run_experiment_detailed, run_experiment_with_threads, CellDiagnostics,
    ExperimentOutput, Flag, ResultRecord,
};
