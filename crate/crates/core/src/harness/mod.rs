// SPDX-License-Identifier: MIT OR Apache-2.0

//! Monte Carlo harness: null calibration, error-rate experiments, phase
//! sweeps, report export and matrix files.

mod calibrate;
mod cell;
mod config;
mod experiment;
mod export;
mod matrix_io;

pub use calibrate::{calibrate, empirical_quantile, quantile_index, Calibration, MIN_REPLICATIONS};
pub use cell::{CellProcedure, ProcedureTemplate};
pub use config::{
    ChangepointSpec, ExperimentConfig, SignalKind, SignalLadder, ThresholdMode,
    CONFIG_SCHEMA_VERSION,
};
pub use experiment::{
    run_experiment, signal_rho2, sweep_phase, CellRecord, ExperimentReport, Frequency,
    PhaseDiagram, PhaseSweep, ReportMetadata, REPORT_SCHEMA_VERSION,
};
pub use export::{
    export, export_phase, read_report_csv, read_report_json, write_phase_csv, write_report_csv,
    write_report_json, Format, CSV_HEADER, PHASE_HEADER,
};
pub use matrix_io::{
    read_matrix, write_matrix, write_matrix_binary, write_matrix_csv, BINARY_MAGIC,
};
