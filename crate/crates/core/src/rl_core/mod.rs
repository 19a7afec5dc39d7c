//! Learners: PPO (clipped surrogate, GAE, shared-trunk actor-critic) and a
//! DQN baseline, both over the [`Environment`] contract.

mod adam;
mod buffer;
mod checkpoint;
mod corridor;
mod dqn;
mod env;
mod nn;
mod policy;
mod ppo;
mod train;

pub use adam::{clip_grad_norm, Adam};
pub use buffer::{gae, normalize, RolloutBuffer};
pub use checkpoint::{Algorithm, Checkpoint, EpisodeStat, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use corridor::{
    Corridor, CORRIDOR_GOAL_REWARD, CORRIDOR_LENGTH, CORRIDOR_OPTIMAL_RETURN, CORRIDOR_STEP_COST,
    CORRIDOR_STEP_LIMIT,
};
pub use dqn::{dqn_train, q_target, DqnConfig, DqnStats, QNetwork};
pub use env::{Environment, Transition};
pub use nn::{argmax, log_softmax, orthogonal, softmax, Dense, Mlp, Trace};
pub use policy::{Policy, PolicyNetwork, HIDDEN_WIDTH};
pub use ppo::{
    clipped_surrogate, ppo_objective, ppo_update, LossParts, Minibatch, PpoConfig, UpdateStats,
};
pub use train::{
    evaluate_policy, train, window_stats, EvalPoint, LogRecord, NoHooks, PpoTrainer, TrainHooks,
    TrainerStats, REWARD_WINDOW,
};
