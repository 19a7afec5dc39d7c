//! On-ramp merging laboratory.
//!
//! A deterministic microscopic simulator of a two-lane highway with a taper
//! and parallel on-ramp, an episodic MDP wrapper with a social-value-orientation
//! weighted reward, from-scratch PPO and DQN trainers, and an evaluation harness
//! for merge safety metrics.
//!
//! Module map:
//!
//! - [`traffic_sim`]: road geometry, IDM car following, MOBIL-style lane changes,
//!   Bernoulli inflows and the 10 Hz stepping loop.
//! - [`mdp_env`]: observation vector, discrete action set, reward and the
//!   environment contract consumed by the trainers.
//! - [`rl_core`]: dense networks, Adam, GAE, clipped-surrogate PPO, DQN and
//!   checkpoints.
//! - [`eval_harness`]: time-to-collision, gap ratio, conflict detection,
//!   batch evaluation, SVO sweeps and trajectory replay.

pub mod error;
pub mod eval_harness;
pub mod mdp_env;
pub mod rl_core;
pub mod scenario;
pub mod seed;
pub mod traffic_sim;

pub use error::{Error, Result};
pub use eval_harness::{DensityConfig, EvaluationSummary, MergeRecord};
pub use mdp_env::{ActionId, EpisodeOutcome, MergeEnv, Observation, RewardConfig, Terminal};
pub use rl_core::{Checkpoint, PolicyNetwork, PpoConfig};
pub use scenario::ScenarioConfig;
pub use traffic_sim::{RoadNetwork, SimState, StepEvent, Vehicle};

/// Simulation and decision period in seconds (10 Hz).
pub const DT: f64 = 0.1;
