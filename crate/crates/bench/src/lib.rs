//! Fixtures shared by the benchmarks.

use onramp_core::mdp_env::{MergeEnv, WARMUP_STEPS};
use onramp_core::rl_core::{Minibatch, PolicyNetwork};
use onramp_core::seed::rng_for;
use onramp_core::{RewardConfig, ScenarioConfig};

/// A merge environment right after reset: warmed-up traffic plus the ego.
pub fn warmed_env(seed: u64) -> MergeEnv {
    let scenario = ScenarioConfig {
        seed,
        ..ScenarioConfig::training()
    };
    let env = MergeEnv::new(scenario, RewardConfig::default()).expect("valid scenario");
    debug_assert!(env.state().step_count() >= WARMUP_STEPS);
    env
}

pub fn network(seed: u64) -> PolicyNetwork {
    PolicyNetwork::new(14, 14, &mut rng_for(seed, 0, &[]))
}

/// Owned storage for a synthetic minibatch.
pub struct BatchData {
    pub observations: Vec<f64>,
    pub actions: Vec<usize>,
    pub old_log_probs: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl BatchData {
    pub fn synthetic(size: usize) -> Self {
        let f = |i: usize, k: usize| ((i * 31 + k * 7) as f64 * 0.173).sin();
        BatchData {
            observations: (0..size * 14).map(|j| f(j / 14, j % 14)).collect(),
            actions: (0..size).map(|i| i % 14).collect(),
            old_log_probs: vec![-(14f64).ln(); size],
            advantages: (0..size).map(|i| f(i, 3)).collect(),
            returns: (0..size).map(|i| f(i, 5) * 4.0).collect(),
        }
    }

    pub fn view(&self) -> Minibatch<'_> {
        Minibatch {
            observations: &self.observations,
            actions: &self.actions,
            old_log_probs: &self.old_log_probs,
            advantages: &self.advantages,
            returns: &self.returns,
        }
    }
}
