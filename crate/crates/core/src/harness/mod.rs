//! Configuration, experiment orchestration, persistence and the command-line
//! interface.

pub mod analysis;
pub mod cli;
pub mod config;
pub mod experiment;
pub mod persist;

pub use analysis::{
    detect_transition, hysteresis_experiment, hysteresis_report, scaling_experiment,
    scaling_report, HysteresisReport, ScalingReport, Transition,
};
pub use config::Config;
pub use experiment::{
    run_sweep, run_sweep_with_workers, ExperimentSpec, Hold, RunRecord, SweepParam, SweepResult,
    WORKERS_ENV,
};
pub use persist::{load, persist};
