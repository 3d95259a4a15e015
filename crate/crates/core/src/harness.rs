//! Experiment driver: plans, deterministic parallel Monte Carlo, ROC sweeps,
//! CSV output and the validation checks.

mod csv;
mod plan;
mod run;
pub mod validate;

pub use csv::{
    emit_csv, emit_observations_csv, format_significant, parse_roc_csv, roc_to_csv, OBSERVATION_HEADER, ROC_HEADER,
};
pub use plan::{
    db_to_linear, default_snr_grid, default_trials, EveModel, ExperimentPlan, DEFAULT_PFA_GRID, DEFAULT_SNR_GRID_DB,
    TRIALS_ENV,
};
pub use run::{run_point, run_roc, run_roc_with_workers, run_sweep, RocPoint, SnrCurve};
