use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::adam::{clip_grad_norm, Adam};
use super::checkpoint::{Algorithm, Checkpoint, EpisodeStat};
use super::env::Environment;
use super::nn::{argmax, Mlp};
use super::policy::{Policy, HIDDEN_WIDTH};
use super::train::{window_stats, LogRecord, TrainHooks, TrainerStats, REWARD_WINDOW};
use crate::seed::{
    derive_seed, rng_for, STREAM_ENV_EPISODE, STREAM_EXPLORE, STREAM_INIT, STREAM_SHUFFLE,
};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DqnConfig {
    pub learning_rate: f64,
    pub buffer_size: usize,
    pub batch_size: usize,
    pub gamma: f64,
    /// Environment steps between target-network copies.
    pub target_update_interval: u64,
    /// Fraction of training over which epsilon decays linearly.
    pub exploration_fraction: f64,
    pub exploration_initial: f64,
    pub exploration_final: f64,
    pub learning_starts: u64,
    /// Environment steps per gradient step.
    pub train_freq: u64,
    pub max_grad_norm: f64,
    pub total_timesteps: u64,
    /// Environment steps per training-log record.
    pub log_interval: u64,
    pub eval_interval: u64,
    pub eval_episodes: usize,
}

impl Default for DqnConfig {
    fn default() -> Self {
        DqnConfig {
            learning_rate: 1e-4,
            buffer_size: 100_000,
            batch_size: 64,
            gamma: 0.99,
            target_update_interval: 10_000,
            exploration_fraction: 0.1,
            exploration_initial: 1.0,
            exploration_final: 0.05,
            learning_starts: 1000,
            train_freq: 4,
            max_grad_norm: 10.0,
            total_timesteps: 15_000_000,
            log_interval: 10_000,
            eval_interval: 100_000,
            eval_episodes: 50,
        }
    }
}

impl DqnConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.learning_rate > 0.0
            && self.buffer_size > 0
            && self.batch_size > 0
            && (0.0..=1.0).contains(&self.gamma)
            && self.target_update_interval > 0
            && self.exploration_fraction > 0.0
            && self.train_freq > 0
            && self.log_interval > 0
            && self.total_timesteps > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config("invalid DQN configuration".into()))
        }
    }

    /// Linearly annealed exploration rate after `step` environment steps.
    pub fn epsilon(&self, step: u64) -> f64 {
        let progress = step as f64 / self.total_timesteps as f64;
        let frac = (progress / self.exploration_fraction).min(1.0);
        self.exploration_initial + frac * (self.exploration_final - self.exploration_initial)
    }
}

/// Action-value network; the greedy action is the argmax over its outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QNetwork {
    pub mlp: Mlp,
}

impl QNetwork {
    pub fn new<R: Rng + ?Sized>(obs_dim: usize, n_actions: usize, rng: &mut R) -> Self {
        QNetwork {
            mlp: Mlp::orthogonal(&[obs_dim, HIDDEN_WIDTH, HIDDEN_WIDTH, n_actions], 1.0, rng),
        }
    }
}

impl Policy for QNetwork {
    fn act(&self, observation: &[f64]) -> usize {
        argmax(&self.mlp.forward(observation))
    }
}

/// `r + gamma * max_a Q_target(s', a) * (1 - done)`.
pub fn q_target(reward: f64, done: bool, gamma: f64, next_q: &[f64]) -> f64 {
    if done {
        reward
    } else {
        reward + gamma * next_q.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
}

struct Replay {
    capacity: usize,
    obs_dim: usize,
    obs: VecDeque<f64>,
    next_obs: VecDeque<f64>,
    actions: VecDeque<usize>,
    rewards: VecDeque<f64>,
    dones: VecDeque<bool>,
}

impl Replay {
    fn push(&mut self, obs: &[f64], action: usize, reward: f64, next: &[f64], done: bool) {
        if self.actions.len() == self.capacity {
            self.obs.drain(..self.obs_dim);
            self.next_obs.drain(..self.obs_dim);
            self.actions.pop_front();
            self.rewards.pop_front();
            self.dones.pop_front();
        }
        self.obs.extend(obs);
        self.next_obs.extend(next);
        self.actions.push_back(action);
        self.rewards.push_back(reward);
        self.dones.push_back(done);
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DqnStats {
    pub huber_loss: f64,
    pub mean_q: f64,
    pub epsilon: f64,
    pub gradient_steps: u64,
}

/// Deep Q-learning on a single environment with uniform replay, a periodically
/// synchronised target network and epsilon-greedy exploration.
pub fn dqn_train<E: Environment>(
    mut env: E,
    cfg: DqnConfig,
    seed: u64,
    hooks: &mut dyn TrainHooks,
) -> Result<Checkpoint> {
    cfg.validate()?;
    let d = env.observation_dim();
    let n_actions = env.action_count();
    let mut online = QNetwork::new(d, n_actions, &mut rng_for(seed, STREAM_INIT, &[]));
    let mut target = online.mlp.clone();
    let mut adam = Adam::new(&online.mlp, cfg.learning_rate);
    let mut explore = rng_for(seed, STREAM_EXPLORE, &[]);
    let mut sampler = rng_for(seed, STREAM_SHUFFLE, &[]);
    let mut replay = Replay {
        capacity: cfg.buffer_size,
        obs_dim: d,
        obs: VecDeque::new(),
        next_obs: VecDeque::new(),
        actions: VecDeque::new(),
        rewards: VecDeque::new(),
        dones: VecDeque::new(),
    };
    let mut episodes = 0u64;
    let mut obs = env.reset(derive_seed(seed, STREAM_ENV_EPISODE, &[0, 0, episodes]))?;
    let mut ep_return = 0.0;
    let mut ep_len = 0u64;
    let mut recent: VecDeque<EpisodeStat> = VecDeque::new();
    let mut stats = DqnStats::default();
    let mut window_loss = (0.0, 0.0, 0u64);
    let mut grads = online.mlp.zeros_like();

    let checkpoint = |online: &QNetwork,
                      target: &Mlp,
                      adam: &Adam,
                      step: u64,
                      recent: &VecDeque<EpisodeStat>| {
        let mut c = Checkpoint::new(Algorithm::Dqn, online.mlp.clone(), n_actions);
        c.seed = seed;
        c.timestep = step;
        c.updates = stats_steps(step, &cfg);
        c.optimizer = Some(adam.clone());
        c.target = Some(target.clone());
        c.recent_episodes = recent.iter().copied().collect();
        c.config = serde_json::to_value(&cfg).expect("config serialises");
        c
    };

    for step in 1..=cfg.total_timesteps {
        let eps = cfg.epsilon(step - 1);
        let action = if step <= cfg.learning_starts || explore.random::<f64>() < eps {
            explore.random_range(0..n_actions)
        } else {
            online.act(&obs)
        };
        let tr = env.step(action).map_err(|e| Error::Environment {
            env: 0,
            timestep: step,
            source: Box::new(e),
        })?;
        replay.push(&obs, action, tr.reward, &tr.observation, tr.done);
        ep_return += tr.reward;
        ep_len += 1;
        if tr.done {
            if recent.len() == REWARD_WINDOW {
                recent.pop_front();
            }
            recent.push_back(EpisodeStat {
                episode_return: ep_return,
                length: ep_len,
                crashed: tr.crashed,
            });
            episodes += 1;
            ep_return = 0.0;
            ep_len = 0;
            obs = env.reset(derive_seed(seed, STREAM_ENV_EPISODE, &[0, 0, episodes]))?;
        } else {
            obs = tr.observation;
        }

        if step > cfg.learning_starts && step % cfg.train_freq == 0 {
            let n = replay.actions.len();
            let b = cfg.batch_size;
            let idx: Vec<usize> = (0..b).map(|_| sampler.random_range(0..n)).collect();
            let mut batch_obs = Vec::with_capacity(b * d);
            let mut targets = Vec::with_capacity(b);
            for &i in &idx {
                batch_obs.extend(replay.obs.range(i * d..(i + 1) * d));
                let next: Vec<f64> = replay.next_obs.range(i * d..(i + 1) * d).copied().collect();
                targets.push(q_target(
                    replay.rewards[i],
                    replay.dones[i],
                    cfg.gamma,
                    &target.forward(&next),
                ));
            }
            let trace = online.mlp.forward_batch(&batch_obs, b);
            let q = trace.output();
            let mut d_out = vec![0.0; b * n_actions];
            let mut loss = 0.0;
            let mut q_sum = 0.0;
            for (k, &i) in idx.iter().enumerate() {
                let qa = q[k * n_actions + replay.actions[i]];
                let diff = qa - targets[k];
                loss += if diff.abs() <= 1.0 {
                    0.5 * diff * diff
                } else {
                    diff.abs() - 0.5
                };
                q_sum += qa;
                d_out[k * n_actions + replay.actions[i]] = diff.clamp(-1.0, 1.0) / b as f64;
            }
            loss /= b as f64;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss {
                    update: step,
                    epoch: 0,
                    minibatch: 0,
                    detail: format!("huber loss {loss}"),
                });
            }
            grads.fill(0.0);
            online.mlp.backward(&trace, &d_out, &mut grads);
            clip_grad_norm(&mut grads, cfg.max_grad_norm);
            adam.step(&mut online.mlp, &grads);
            stats.gradient_steps += 1;
            window_loss.0 += loss;
            window_loss.1 += q_sum / b as f64;
            window_loss.2 += 1;
        }
        if step % cfg.target_update_interval == 0 {
            target.copy_from(&online.mlp);
        }
        if step % cfg.log_interval == 0 {
            let k = window_loss.2.max(1) as f64;
            stats.huber_loss = window_loss.0 / k;
            stats.mean_q = window_loss.1 / k;
            stats.epsilon = eps;
            window_loss = (0.0, 0.0, 0);
            let (mean, crash) = window_stats(&recent);
            hooks.record(&LogRecord::Update {
                timestep: step,
                update: step / cfg.log_interval,
                mean_episode_reward: mean,
                train_collision_pct: crash,
                episodes,
                stats: TrainerStats::Dqn(stats),
            })?;
        }
        if cfg.eval_interval > 0 && step % cfg.eval_interval == 0 {
            if let Some(point) = hooks.evaluate(&online, step)? {
                hooks.record(&LogRecord::Eval {
                    timestep: step,
                    mean_episode_reward: point.mean_episode_reward,
                    eval_collision_pct: point.collision_pct,
                    episodes: point.episodes,
                })?;
            }
            hooks.checkpoint(&checkpoint(&online, &target, &adam, step, &recent))?;
        }
    }
    let last = checkpoint(&online, &target, &adam, cfg.total_timesteps, &recent);
    if cfg.eval_interval == 0 || !cfg.total_timesteps.is_multiple_of(cfg.eval_interval) {
        hooks.checkpoint(&last)?;
    }
    Ok(last)
}

fn stats_steps(step: u64, cfg: &DqnConfig) -> u64 {
    step.saturating_sub(cfg.learning_starts) / cfg.train_freq
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn target_masks_terminal() {
        assert_eq!(q_target(1.0, true, 0.99, &[5.0, 7.0]), 1.0);
        assert!((q_target(1.0, false, 0.5, &[5.0, 7.0, -1.0]) - 4.5).abs() < 1e-12);
    }

    #[test]
    fn epsilon_schedule() {
        let c = DqnConfig {
            total_timesteps: 1000,
            ..DqnConfig::default()
        };
        assert_eq!(c.epsilon(0), 1.0);
        assert!((c.epsilon(50) - 0.525).abs() < 1e-12);
        assert!((c.epsilon(100) - 0.05).abs() < 1e-12);
        assert!((c.epsilon(900) - 0.05).abs() < 1e-12);
    }

    #[test]
    fn greedy_is_argmax() {
        let mut q = QNetwork::new(3, 14, &mut ChaCha8Rng::seed_from_u64(0));
        let out = q.mlp.layers.last_mut().unwrap();
        out.weights.fill(0.0);
        out.biases = (0..14).map(|i| if i == 9 { 1.0 } else { 0.0 }).collect();
        assert_eq!(q.act(&[0.1, 0.2, 0.3]), 9);
    }
}
