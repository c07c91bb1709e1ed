//! Experiment harness for the block finite difference transport scheme.

pub mod analysis;
pub mod config;
pub mod experiments;
pub mod table;

pub use config::{ExperimentConfig, InitialData, Propagator, Scheme};
pub use experiments::{
    cmd_convergence, cmd_dg_check, cmd_error_vs_time, cmd_long_time, cmd_phase_demo, cmd_stability,
    cmd_symbol_dump, ConvergenceReport, LatticeSpec,
};
pub use table::{Format, Table};
