//! Scenario files, the fixed-step simulation loop and run outputs.

pub mod engine;
pub mod log;
pub mod random;
pub mod scenario;
pub mod svg;

pub use engine::{run, RunOutcome};
pub use random::random_scenario2d;
pub use log::{LogRecord, RunSummary, Termination, TrajectoryLog};
pub use scenario::{
    CompiledScenario, DeformationSpec, MotionSegment, MotionSpec, ObstacleSpec, ObstacleTrack, PlannerKind,
    PlannerSettings, Scenario, ScriptConstraint, ShapeSpec, Spin, MAX_DEFORMATION_RATE,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid field `{field}`: {message}")]
    InvalidField { field: String, message: String },
    #[error("obstacle {obstacle} at step {step}: {constraint} ({value} > {limit})")]
    ConstraintViolation { obstacle: usize, step: usize, constraint: ScriptConstraint, value: f64, limit: f64 },
    #[error("io: {0}")]
    Io(String),
}

impl SimError {
    /// Process exit code for the command-line tool. Every variant is a
    /// configuration error, including an unreadable scenario file.
    pub fn exit_code(&self) -> i32 {
        2
    }
}
