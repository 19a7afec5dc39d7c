use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::adam::{clip_grad_norm, Adam};
use super::buffer::{normalize, RolloutBuffer};
use super::nn::{log_softmax, Mlp};
use super::policy::PolicyNetwork;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PpoConfig {
    pub learning_rate: f64,
    /// Steps collected per environment between updates.
    pub horizon: usize,
    pub minibatch_size: usize,
    pub epochs: usize,
    pub gamma: f64,
    pub clip_epsilon: f64,
    pub value_coef: f64,
    pub entropy_coef: f64,
    pub gae_lambda: f64,
    pub n_envs: usize,
    pub total_timesteps: u64,
    pub max_grad_norm: f64,
    pub normalize_advantages: bool,
    /// Evaluation cadence in environment steps; 0 disables evaluation.
    pub eval_interval: u64,
    pub eval_episodes: usize,
}

impl Default for PpoConfig {
    fn default() -> Self {
        PpoConfig {
            learning_rate: 3e-4,
            horizon: 2048,
            minibatch_size: 64,
            epochs: 10,
            gamma: 0.99,
            clip_epsilon: 0.2,
            value_coef: 0.5,
            entropy_coef: 0.0,
            gae_lambda: 0.95,
            n_envs: 20,
            total_timesteps: 15_000_000,
            max_grad_norm: 0.5,
            normalize_advantages: true,
            eval_interval: 100_000,
            eval_episodes: 50,
        }
    }
}

impl PpoConfig {
    /// Environment steps consumed per update.
    pub fn steps_per_update(&self) -> u64 {
        (self.horizon * self.n_envs) as u64
    }

    /// Number of collect/update cycles: the smallest count whose steps cover
    /// `total_timesteps`.
    pub fn update_count(&self) -> u64 {
        self.total_timesteps.div_ceil(self.steps_per_update())
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return fail("learning_rate must be positive");
        }
        if self.horizon == 0 || self.minibatch_size == 0 || self.epochs == 0 || self.n_envs == 0 {
            return fail("horizon, minibatch_size, epochs and n_envs must be positive");
        }
        if !(0.0..=1.0).contains(&self.gamma) || !(0.0..=1.0).contains(&self.gae_lambda) {
            return fail("gamma and gae_lambda must lie in [0, 1]");
        }
        if !(self.clip_epsilon > 0.0 && self.clip_epsilon < 1.0) {
            return fail("clip_epsilon must lie in (0, 1)");
        }
        if self.value_coef < 0.0 || self.entropy_coef < 0.0 || self.max_grad_norm <= 0.0 {
            return fail("coefficients must be non-negative and max_grad_norm positive");
        }
        if self.total_timesteps == 0 {
            return fail("total_timesteps must be positive");
        }
        Ok(())
    }
}

/// `min(z * adv, clip(z, 1 - eps, 1 + eps) * adv)`.
pub fn clipped_surrogate(ratio: f64, advantage: f64, epsilon: f64) -> f64 {
    let clipped = ratio.clamp(1.0 - epsilon, 1.0 + epsilon);
    (ratio * advantage).min(clipped * advantage)
}

/// Borrowed view of the samples that make up one gradient step.
#[derive(Debug, Clone, Copy)]
pub struct Minibatch<'a> {
    /// Row-major `len × obs_dim`.
    pub observations: &'a [f64],
    pub actions: &'a [usize],
    pub old_log_probs: &'a [f64],
    pub advantages: &'a [f64],
    pub returns: &'a [f64],
}

impl Minibatch<'_> {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

/// Batch means of the objective's parts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossParts {
    /// Clipped surrogate term.
    pub actor: f64,
    /// Mean squared value error.
    pub value_loss: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
}

impl LossParts {
    /// `actor - c1 * value_loss + c2 * entropy`, the quantity ascended.
    pub fn objective(&self, cfg: &PpoConfig) -> f64 {
        self.actor - cfg.value_coef * self.value_loss + cfg.entropy_coef * self.entropy
    }
}

/// Objective parts and, when `grads` is given, accumulate the gradient of the
/// loss `-objective` into it.
pub fn ppo_objective(
    net: &PolicyNetwork,
    batch: &Minibatch<'_>,
    cfg: &PpoConfig,
    grads: Option<&mut Mlp>,
) -> LossParts {
    let n = batch.len();
    let n_actions = net.n_actions;
    let width = n_actions + 1;
    let trace = net.mlp.forward_batch(batch.observations, n);
    let out = trace.output();
    let inv_n = 1.0 / n as f64;
    let eps = cfg.clip_epsilon;
    let mut parts = LossParts::default();
    let mut d_out = vec![0.0; n * width];
    for i in 0..n {
        let row = &out[i * width..(i + 1) * width];
        let logits = &row[..n_actions];
        let value = row[n_actions];
        let log_p = log_softmax(logits);
        let a = batch.actions[i];
        let adv = batch.advantages[i];
        let log_ratio = log_p[a] - batch.old_log_probs[i];
        let ratio = log_ratio.exp();
        let s1 = ratio * adv;
        let s2 = ratio.clamp(1.0 - eps, 1.0 + eps) * adv;
        parts.actor += s1.min(s2);
        let err = value - batch.returns[i];
        parts.value_loss += err * err;
        let entropy: f64 = -log_p.iter().map(|lp| lp.exp() * lp).sum::<f64>();
        parts.entropy += entropy;
        parts.approx_kl += ratio - 1.0 - log_ratio;
        if (ratio - 1.0).abs() > eps {
            parts.clip_fraction += 1.0;
        }

        let d = &mut d_out[i * width..(i + 1) * width];
        // Unclipped branch active: d(z * adv)/d logit_k = adv * z * (1[k=a] - p_k).
        let actor_scale = if s1 <= s2 { adv * ratio } else { 0.0 };
        for k in 0..n_actions {
            let p = log_p[k].exp();
            let indicator = if k == a { 1.0 } else { 0.0 };
            let d_actor = actor_scale * (indicator - p);
            let d_entropy = if cfg.entropy_coef != 0.0 {
                -p * (log_p[k] + entropy)
            } else {
                0.0
            };
            d[k] = -(d_actor + cfg.entropy_coef * d_entropy) * inv_n;
        }
        d[n_actions] = 2.0 * cfg.value_coef * err * inv_n;
    }
    parts.actor *= inv_n;
    parts.value_loss *= inv_n;
    parts.entropy *= inv_n;
    parts.approx_kl *= inv_n;
    parts.clip_fraction *= inv_n;
    if let Some(g) = grads {
        net.mlp.backward(&trace, &d_out, g);
    }
    parts
}

/// Averages over every minibatch of every epoch in one update.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct UpdateStats {
    pub actor: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
    pub grad_norm: f64,
    pub minibatches: usize,
}

/// `epochs` passes of shuffled minibatch Adam steps over a buffer whose
/// advantages have been computed.
pub fn ppo_update<R: Rng + ?Sized>(
    net: &mut PolicyNetwork,
    adam: &mut Adam,
    buffer: &RolloutBuffer,
    cfg: &PpoConfig,
    rng: &mut R,
    update: u64,
) -> Result<UpdateStats> {
    assert_eq!(
        buffer.advantages.len(),
        buffer.len(),
        "advantages not computed"
    );
    let advantages = if cfg.normalize_advantages {
        normalize(&buffer.advantages)
    } else {
        buffer.advantages.clone()
    };
    let d = buffer.obs_dim;
    let mb = cfg.minibatch_size;
    let mut order: Vec<usize> = (0..buffer.len()).collect();
    let mut stats = UpdateStats::default();
    let mut grads = net.mlp.zeros_like();
    let (mut obs, mut act, mut old, mut adv, mut ret) =
        (Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for epoch in 0..cfg.epochs {
        order.shuffle(rng);
        for (k, chunk) in order.chunks(mb).enumerate() {
            obs.clear();
            act.clear();
            old.clear();
            adv.clear();
            ret.clear();
            for &i in chunk {
                obs.extend_from_slice(buffer.observation(i));
                act.push(buffer.actions[i]);
                old.push(buffer.log_probs[i]);
                adv.push(advantages[i]);
                ret.push(buffer.returns[i]);
            }
            debug_assert_eq!(obs.len(), chunk.len() * d);
            let batch = Minibatch {
                observations: &obs,
                actions: &act,
                old_log_probs: &old,
                advantages: &adv,
                returns: &ret,
            };
            grads.fill(0.0);
            let parts = ppo_objective(net, &batch, cfg, Some(&mut grads));
            let loss = -parts.objective(cfg);
            if !loss.is_finite() || !grads.is_finite() {
                return Err(Error::NonFiniteLoss {
                    update,
                    epoch,
                    minibatch: k,
                    detail: format!(
                        "actor={} value_loss={} entropy={} grad_norm={}",
                        parts.actor,
                        parts.value_loss,
                        parts.entropy,
                        grads.norm()
                    ),
                });
            }
            stats.grad_norm += clip_grad_norm(&mut grads, cfg.max_grad_norm);
            adam.step(&mut net.mlp, &grads);
            stats.actor += parts.actor;
            stats.value_loss += parts.value_loss;
            stats.entropy += parts.entropy;
            stats.approx_kl += parts.approx_kl;
            stats.clip_fraction += parts.clip_fraction;
            stats.minibatches += 1;
        }
    }
    let m = stats.minibatches.max(1) as f64;
    stats.actor /= m;
    stats.value_loss /= m;
    stats.entropy /= m;
    stats.approx_kl /= m;
    stats.clip_fraction /= m;
    stats.grad_norm /= m;
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn surrogate_examples() {
        assert_eq!(clipped_surrogate(1.3, 1.0, 0.2), 1.2);
        assert_eq!(clipped_surrogate(0.5, -1.0, 0.2), -0.8);
        assert_eq!(clipped_surrogate(1.0, 0.7, 0.2), 0.7);
    }

    #[test]
    fn defaults() {
        let c = PpoConfig::default();
        assert_eq!(c.steps_per_update(), 40_960);
        assert_eq!(c.update_count(), 367);
        let one = PpoConfig {
            total_timesteps: 40_960,
            ..c
        };
        assert_eq!(one.update_count(), 1);
        one.validate().unwrap();
    }

    #[test]
    fn ratio_is_one_under_collection_policy() {
        let net = PolicyNetwork::new(3, 4, &mut ChaCha8Rng::seed_from_u64(5));
        let obs = [0.1, -0.4, 0.9, 0.5, 0.5, 0.5];
        let actions = [2, 0];
        let old: Vec<f64> = (0..2)
            .map(|i| log_softmax(&net.forward(&obs[i * 3..i * 3 + 3]).0)[actions[i]])
            .collect();
        let advantages = [0.8, -1.7];
        let returns = [0.0, 0.0];
        let batch = Minibatch {
            observations: &obs,
            actions: &actions,
            old_log_probs: &old,
            advantages: &advantages,
            returns: &returns,
        };
        let parts = ppo_objective(&net, &batch, &PpoConfig::default(), None);
        assert!((parts.actor - (0.8 - 1.7) / 2.0).abs() < 1e-12);
        assert_eq!(parts.clip_fraction, 0.0);
    }
}
