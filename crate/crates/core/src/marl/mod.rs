//! MADDPG with a shared decentralised actor and a centralised critic, either
//! of which may be a steerable message-passing network or an MLP.

mod buffer;
mod config;
mod learner;
mod networks;
mod train;

pub use buffer::{exploration_noise, ReplayBuffer, Transition};
pub use config::{Arch, OptimizerKind, TrainingConfig};
pub use learner::{stream_rng, td_target, Maddpg, UpdateStats};
pub use networks::{actions_tensor, ActorNet, CriticNet};
pub use train::{
    actor_policy, continue_training, eval_initial_state, evaluate, evaluate_learner, heuristic_policy, maddpg_train,
    random_policy, save_metrics_csv, transfer, write_metrics_csv, write_metrics_row, zero_shot_eval, Evaluation, MetricRow, Policy,
    TrainOutput, METRICS_HEADER,
};
