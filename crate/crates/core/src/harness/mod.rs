//! Seeded experiment runner behind the command-line tool.

pub mod config;
pub mod experiments;
pub mod records;
pub mod seed;
pub mod stats;

pub use config::{parse_list, parse_number, ExperimentConfig, ExperimentId, MixtureSpec};
pub use experiments::{bounds, run_experiment, summarize, write_artifacts, ExperimentOutput};
pub use records::{
    fmt_f64, group_label, group_param, parse_runs_csv, runs_csv, Check, Figure, RunRecord, Summary, SummaryRow,
};
pub use seed::{run_rng, stream_id};
pub use stats::{fit_loglog_slope, mean, std_error};
