//! Environments: a continuous E(3)-symmetric particle navigation game and a
//! small C4-symmetric gridworld for exhaustive checks.

mod navigation;
mod tabular;

pub use navigation::{
    heuristic_actions, nav_observe, nav_reset, nav_reward, nav_step, random_actions, sample_initial_state, transform_action, EntityKind, JointAction, NavConfig, NavEnv,
    Observation, PointCloudState, StepOutcome, TraceRecord, TraceWriter,
};
pub use tabular::{AuditViolation, GridMove, TabularGame, C4};
