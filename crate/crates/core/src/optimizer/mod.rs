//! Classical angle optimization for QAOA.

pub mod experiment;
pub mod lbfgs;

pub use experiment::{
    aggregate, extend_trajectory, random_start, restarts_at_level, run_experiment, run_trajectory,
    AggregateLevel, ExperimentResult, LevelSummary, RunRecord, TrajectoryResult,
};
pub use lbfgs::{minimize, MinimizeResult, OptimizerConfig};
