use std::collections::VecDeque;

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::buffer::RolloutBuffer;
use super::checkpoint::{Algorithm, Checkpoint, EpisodeStat};
use super::dqn::DqnStats;
use super::env::Environment;
use super::policy::{Policy, PolicyNetwork};
use super::ppo::{ppo_update, PpoConfig, UpdateStats};
use crate::seed::{
    derive_seed, rng_for, STREAM_ENV_ACTIONS, STREAM_ENV_EPISODE, STREAM_EVAL, STREAM_INIT,
    STREAM_SHUFFLE,
};
use crate::{Error, Result};

/// Episodes in the rolling mean reported with each update.
pub const REWARD_WINDOW: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalPoint {
    pub mean_episode_reward: f64,
    pub collision_pct: f64,
    pub episodes: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TrainerStats {
    Ppo(UpdateStats),
    Dqn(DqnStats),
}

/// One line of the JSON-lines training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LogRecord {
    Update {
        timestep: u64,
        update: u64,
        /// Mean return of the last [`REWARD_WINDOW`] finished training episodes.
        mean_episode_reward: Option<f64>,
        train_collision_pct: Option<f64>,
        episodes: u64,
        stats: TrainerStats,
    },
    Eval {
        timestep: u64,
        mean_episode_reward: f64,
        eval_collision_pct: f64,
        episodes: usize,
    },
}

/// Callbacks invoked by the training loops.
pub trait TrainHooks {
    /// Called every `eval_interval` steps with the current greedy policy.
    fn evaluate(&mut self, _policy: &dyn Policy, _timestep: u64) -> Result<Option<EvalPoint>> {
        Ok(None)
    }

    fn record(&mut self, _record: &LogRecord) -> Result<()> {
        Ok(())
    }

    /// Called after each evaluation and once at the end of training.
    fn checkpoint(&mut self, _checkpoint: &Checkpoint) -> Result<()> {
        Ok(())
    }
}

/// Hooks that do nothing.
pub struct NoHooks;

impl TrainHooks for NoHooks {}

/// Greedy rollouts of `policy` on episodes seeded from the evaluation stream.
/// Episode `k` always uses the same seed, so successive evaluations during
/// training are compared on identical traffic.
pub fn evaluate_policy<E, F>(
    make_env: F,
    policy: &dyn Policy,
    episodes: usize,
    seed: u64,
    parallel: bool,
) -> Result<EvalPoint>
where
    E: Environment,
    F: Fn(usize) -> Result<E> + Sync,
{
    let run = |k: usize| -> Result<(f64, bool)> {
        let mut env = make_env(k)?;
        let mut obs = env.reset(derive_seed(seed, STREAM_EVAL, &[k as u64]))?;
        let mut total = 0.0;
        loop {
            let t = env.step(policy.act(&obs))?;
            total += t.reward;
            if t.done {
                return Ok((total, t.crashed));
            }
            obs = t.observation;
        }
    };
    let results: Vec<(f64, bool)> = if parallel {
        (0..episodes)
            .into_par_iter()
            .map(run)
            .collect::<Result<_>>()?
    } else {
        (0..episodes).map(run).collect::<Result<_>>()?
    };
    let n = results.len().max(1) as f64;
    Ok(EvalPoint {
        mean_episode_reward: results.iter().map(|r| r.0).sum::<f64>() / n,
        collision_pct: 100.0 * results.iter().filter(|r| r.1).count() as f64 / n,
        episodes: results.len(),
    })
}

struct Worker<E> {
    env: E,
    index: usize,
    /// Distinguishes episode seeds of a resumed run from the original.
    generation: u64,
    obs: Vec<f64>,
    rng: ChaCha8Rng,
    seed: u64,
    episodes: u64,
    episode_return: f64,
    episode_length: u64,
}

struct Segment {
    observations: Vec<f64>,
    actions: Vec<usize>,
    log_probs: Vec<f64>,
    rewards: Vec<f64>,
    values: Vec<f64>,
    dones: Vec<bool>,
    bootstrap: f64,
    finished: Vec<EpisodeStat>,
}

impl<E: Environment> Worker<E> {
    fn new(mut env: E, index: usize, seed: u64, generation: u64) -> Result<Self> {
        let first = derive_seed(seed, STREAM_ENV_EPISODE, &[index as u64, generation, 0]);
        let obs = env.reset(first)?;
        Ok(Worker {
            env,
            index,
            generation,
            obs,
            rng: rng_for(seed, STREAM_ENV_ACTIONS, &[index as u64, generation]),
            seed,
            episodes: 1,
            episode_return: 0.0,
            episode_length: 0,
        })
    }

    fn collect(&mut self, net: &PolicyNetwork, horizon: usize, timestep: u64) -> Result<Segment> {
        let wrap = |e: Error, t: usize| Error::Environment {
            env: self.index,
            timestep: timestep + t as u64,
            source: Box::new(e),
        };
        let d = self.obs.len();
        let mut seg = Segment {
            observations: Vec::with_capacity(horizon * d),
            actions: Vec::with_capacity(horizon),
            log_probs: Vec::with_capacity(horizon),
            rewards: Vec::with_capacity(horizon),
            values: Vec::with_capacity(horizon),
            dones: Vec::with_capacity(horizon),
            bootstrap: 0.0,
            finished: Vec::new(),
        };
        for t in 0..horizon {
            let (action, log_prob, value) = net.sample(&self.obs, &mut self.rng);
            let tr = self.env.step(action).map_err(|e| wrap(e, t))?;
            seg.observations.extend_from_slice(&self.obs);
            seg.actions.push(action);
            seg.log_probs.push(log_prob);
            seg.rewards.push(tr.reward);
            seg.values.push(value);
            seg.dones.push(tr.done);
            self.episode_return += tr.reward;
            self.episode_length += 1;
            if tr.done {
                seg.finished.push(EpisodeStat {
                    episode_return: self.episode_return,
                    length: self.episode_length,
                    crashed: tr.crashed,
                });
                self.episode_return = 0.0;
                self.episode_length = 0;
                let s = derive_seed(
                    self.seed,
                    STREAM_ENV_EPISODE,
                    &[self.index as u64, self.generation, self.episodes],
                );
                self.episodes += 1;
                self.obs = self.env.reset(s).map_err(|e| wrap(e, t))?;
            } else {
                self.obs = tr.observation;
            }
        }
        seg.bootstrap = net.value(&self.obs);
        Ok(seg)
    }
}

/// Mean return and collision percentage over a window of episodes.
pub fn window_stats(recent: &VecDeque<EpisodeStat>) -> (Option<f64>, Option<f64>) {
    if recent.is_empty() {
        return (None, None);
    }
    let n = recent.len() as f64;
    let mean = recent.iter().map(|e| e.episode_return).sum::<f64>() / n;
    let crash = 100.0 * recent.iter().filter(|e| e.crashed).count() as f64 / n;
    (Some(mean), Some(crash))
}

/// PPO over `n_envs` environments with synchronous rollouts.
pub struct PpoTrainer<E> {
    cfg: PpoConfig,
    seed: u64,
    net: PolicyNetwork,
    adam: Adam,
    workers: Vec<Worker<E>>,
    shuffle_rng: ChaCha8Rng,
    timestep: u64,
    updates: u64,
    episodes: u64,
    recent: VecDeque<EpisodeStat>,
    parallel: bool,
}

impl<E: Environment> PpoTrainer<E> {
    pub fn new<F: FnMut(usize) -> Result<E>>(
        make_env: F,
        cfg: PpoConfig,
        seed: u64,
    ) -> Result<Self> {
        cfg.validate()?;
        let mut make_env = make_env;
        let probe = make_env(0)?;
        let net = PolicyNetwork::new(
            probe.observation_dim(),
            probe.action_count(),
            &mut rng_for(seed, STREAM_INIT, &[]),
        );
        drop(probe);
        let adam = Adam::new(&net.mlp, cfg.learning_rate);
        Self::assemble(make_env, cfg, seed, net, adam, 0, 0, VecDeque::new())
    }

    /// Continue from a PPO checkpoint. Episodes interrupted by the save are
    /// not restored; fresh episodes start from a new seed generation.
    pub fn resume<F: FnMut(usize) -> Result<E>>(
        make_env: F,
        cfg: PpoConfig,
        ckpt: &Checkpoint,
    ) -> Result<Self> {
        cfg.validate()?;
        if ckpt.algorithm != Algorithm::Ppo {
            return Err(Error::Config("checkpoint was not produced by PPO".into()));
        }
        let net = PolicyNetwork {
            mlp: ckpt.network.clone(),
            n_actions: ckpt.n_actions,
        };
        let mut adam = match &ckpt.optimizer {
            Some(a) => a.clone(),
            None => Adam::new(&net.mlp, cfg.learning_rate),
        };
        adam.learning_rate = cfg.learning_rate;
        let recent = ckpt.recent_episodes.iter().copied().collect();
        Self::assemble(
            make_env,
            cfg,
            ckpt.seed,
            net,
            adam,
            ckpt.timestep,
            ckpt.updates,
            recent,
        )
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble<F: FnMut(usize) -> Result<E>>(
        mut make_env: F,
        cfg: PpoConfig,
        seed: u64,
        net: PolicyNetwork,
        adam: Adam,
        timestep: u64,
        updates: u64,
        recent: VecDeque<EpisodeStat>,
    ) -> Result<Self> {
        let mut workers = Vec::with_capacity(cfg.n_envs);
        for i in 0..cfg.n_envs {
            let env = make_env(i)?;
            if env.observation_dim() != net.obs_dim() || env.action_count() != net.n_actions {
                return Err(Error::Config(format!(
                    "environment {i} has {} inputs and {} actions, network expects {} and {}",
                    env.observation_dim(),
                    env.action_count(),
                    net.obs_dim(),
                    net.n_actions
                )));
            }
            workers.push(Worker::new(env, i, seed, updates)?);
        }
        Ok(PpoTrainer {
            shuffle_rng: rng_for(seed, STREAM_SHUFFLE, &[updates]),
            cfg,
            seed,
            net,
            adam,
            workers,
            timestep,
            updates,
            episodes: 0,
            recent,
            parallel: true,
        })
    }

    /// Parallel and sequential collection produce identical buffers; the
    /// switch only affects wall time.
    pub fn set_parallel(&mut self, parallel: bool) {
        self.parallel = parallel;
    }

    pub fn network(&self) -> &PolicyNetwork {
        &self.net
    }

    pub fn config(&self) -> &PpoConfig {
        &self.cfg
    }

    pub fn timestep(&self) -> u64 {
        self.timestep
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn is_finished(&self) -> bool {
        self.updates >= self.cfg.update_count()
    }

    /// Collect `horizon` steps from every environment into a buffer with
    /// advantages and returns filled in.
    pub fn collect(&mut self) -> Result<(RolloutBuffer, Vec<EpisodeStat>)> {
        let horizon = self.cfg.horizon;
        let net = &self.net;
        let ts = self.timestep;
        let segments: Vec<Segment> = if self.parallel {
            self.workers
                .par_iter_mut()
                .map(|w| w.collect(net, horizon, ts))
                .collect::<Result<_>>()?
        } else {
            self.workers
                .iter_mut()
                .map(|w| w.collect(net, horizon, ts))
                .collect::<Result<_>>()?
        };
        let mut buf = RolloutBuffer {
            obs_dim: net.obs_dim(),
            n_envs: segments.len(),
            horizon,
            ..Default::default()
        };
        let mut finished = Vec::new();
        for s in segments {
            buf.observations.extend(s.observations);
            buf.actions.extend(s.actions);
            buf.log_probs.extend(s.log_probs);
            buf.rewards.extend(s.rewards);
            buf.values.extend(s.values);
            buf.dones.extend(s.dones);
            buf.bootstrap.push(s.bootstrap);
            finished.extend(s.finished);
        }
        buf.compute_gae(self.cfg.gamma, self.cfg.gae_lambda);
        Ok((buf, finished))
    }

    /// One collect/update cycle; returns the log record for it.
    pub fn iterate(&mut self) -> Result<LogRecord> {
        let (buffer, finished) = self.collect()?;
        self.timestep += buffer.len() as u64;
        self.episodes += finished.len() as u64;
        for e in finished {
            if self.recent.len() == REWARD_WINDOW {
                self.recent.pop_front();
            }
            self.recent.push_back(e);
        }
        let stats = ppo_update(
            &mut self.net,
            &mut self.adam,
            &buffer,
            &self.cfg,
            &mut self.shuffle_rng,
            self.updates,
        )?;
        self.updates += 1;
        let (mean, crash) = window_stats(&self.recent);
        Ok(LogRecord::Update {
            timestep: self.timestep,
            update: self.updates,
            mean_episode_reward: mean,
            train_collision_pct: crash,
            episodes: self.episodes,
            stats: TrainerStats::Ppo(stats),
        })
    }

    pub fn checkpoint(&self) -> Checkpoint {
        let mut c = Checkpoint::new(Algorithm::Ppo, self.net.mlp.clone(), self.net.n_actions);
        c.seed = self.seed;
        c.timestep = self.timestep;
        c.updates = self.updates;
        c.optimizer = Some(self.adam.clone());
        c.recent_episodes = self.recent.iter().copied().collect();
        c.config = serde_json::to_value(&self.cfg).expect("config serialises");
        c
    }

    /// Run until `total_timesteps` is covered, driving `hooks`.
    pub fn run(&mut self, hooks: &mut dyn TrainHooks) -> Result<Checkpoint> {
        let interval = self.cfg.eval_interval;
        let mut next_eval = self
            .timestep
            .checked_div(interval)
            .map_or(u64::MAX, |k| (k + 1) * interval);
        let mut saved_at = None;
        while !self.is_finished() {
            let record = self.iterate()?;
            hooks.record(&record)?;
            if self.timestep >= next_eval {
                next_eval = (self.timestep / interval + 1) * interval;
                if let Some(point) = hooks.evaluate(&self.net, self.timestep)? {
                    hooks.record(&LogRecord::Eval {
                        timestep: self.timestep,
                        mean_episode_reward: point.mean_episode_reward,
                        eval_collision_pct: point.collision_pct,
                        episodes: point.episodes,
                    })?;
                }
                hooks.checkpoint(&self.checkpoint())?;
                saved_at = Some(self.updates);
            }
        }
        let last = self.checkpoint();
        if saved_at != Some(self.updates) {
            hooks.checkpoint(&last)?;
        }
        Ok(last)
    }
}

/// Train PPO from scratch; see [`PpoTrainer`].
pub fn train<E, F>(
    make_env: F,
    cfg: PpoConfig,
    seed: u64,
    parallel: bool,
    hooks: &mut dyn TrainHooks,
) -> Result<Checkpoint>
where
    E: Environment,
    F: FnMut(usize) -> Result<E>,
{
    let mut trainer = PpoTrainer::new(make_env, cfg, seed)?;
    trainer.set_parallel(parallel);
    trainer.run(hooks)
}
