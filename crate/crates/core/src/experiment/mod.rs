//! Seeded recovery experiments and their reports.

mod config;
mod report;
mod run;

pub use config::{ExperimentConfig, FilterMode, GraphType, KernelFamily, ReportFormat, KEYS};
pub use report::{emit_report, emit_signal_dump, write_report, write_signal_dump, CSV_HEADER};
pub use run::{
    build_channels, run_experiment, run_one, select_channels, Aggregate, BridgeRecord, Channels,
    FailureKind, Method, PerMethod, RecoveryReport, RunArtifacts, RunOutcome, RunRecord,
    SelectionSummary, Summary, Timings, METHODS,
};
