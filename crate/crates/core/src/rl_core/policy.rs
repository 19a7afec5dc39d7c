use rand::Rng;
use serde::{Deserialize, Serialize};

use super::nn::{argmax, log_softmax, orthogonal, softmax, Mlp};

pub const HIDDEN_WIDTH: usize = 64;

/// Anything that picks an action greedily from an observation.
pub trait Policy: Sync {
    fn act(&self, observation: &[f64]) -> usize;
}

/// Actor-critic network: shared ReLU trunk, output layer holding the policy
/// logits in rows `0..n_actions` and the value in the final row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyNetwork {
    pub mlp: Mlp,
    pub n_actions: usize,
}

impl PolicyNetwork {
    /// Orthogonal init: gain sqrt(2) in the trunk, 0.01 on the policy head,
    /// 1 on the value head.
    pub fn new<R: Rng + ?Sized>(obs_dim: usize, n_actions: usize, rng: &mut R) -> Self {
        let sizes = [obs_dim, HIDDEN_WIDTH, HIDDEN_WIDTH, n_actions + 1];
        let mut mlp = Mlp::orthogonal(&sizes, 1.0, rng);
        let out = mlp.layers.last_mut().unwrap();
        let policy = orthogonal(n_actions, out.inputs, 0.01, rng);
        let value = orthogonal(1, out.inputs, 1.0, rng);
        out.weights[..policy.len()].copy_from_slice(&policy);
        out.weights[policy.len()..].copy_from_slice(&value);
        PolicyNetwork { mlp, n_actions }
    }

    pub fn zeros(obs_dim: usize, n_actions: usize) -> Self {
        PolicyNetwork {
            mlp: Mlp::zeros(&[obs_dim, HIDDEN_WIDTH, HIDDEN_WIDTH, n_actions + 1]),
            n_actions,
        }
    }

    pub fn obs_dim(&self) -> usize {
        self.mlp.input_size()
    }

    /// `(logits, value)`.
    pub fn forward(&self, observation: &[f64]) -> (Vec<f64>, f64) {
        let mut out = self.mlp.forward(observation);
        let value = out.pop().unwrap();
        (out, value)
    }

    pub fn probabilities(&self, observation: &[f64]) -> Vec<f64> {
        softmax(&self.forward(observation).0)
    }

    pub fn value(&self, observation: &[f64]) -> f64 {
        self.forward(observation).1
    }

    /// Sample an action; returns `(action, log_prob, value)`.
    pub fn sample<R: Rng + ?Sized>(&self, observation: &[f64], rng: &mut R) -> (usize, f64, f64) {
        let (logits, value) = self.forward(observation);
        let log_p = log_softmax(&logits);
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut action = self.n_actions - 1;
        for (a, lp) in log_p.iter().enumerate() {
            acc += lp.exp();
            if u < acc {
                action = a;
                break;
            }
        }
        (action, log_p[action], value)
    }
}

impl Policy for PolicyNetwork {
    fn act(&self, observation: &[f64]) -> usize {
        argmax(&self.forward(observation).0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_network_is_uniform() {
        let net = PolicyNetwork::zeros(14, 14);
        let (logits, value) = net.forward(&[0.3; 14]);
        assert!(logits.iter().all(|&l| l == 0.0));
        assert_eq!(value, 0.0);
        for p in net.probabilities(&[0.3; 14]) {
            assert!((p - 1.0 / 14.0).abs() < 1e-15);
        }
    }

    #[test]
    fn seeded_init_is_reproducible() {
        let a = PolicyNetwork::new(14, 14, &mut ChaCha8Rng::seed_from_u64(9));
        let b = PolicyNetwork::new(14, 14, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
        let obs: Vec<f64> = (0..14).map(|i| i as f64 / 10.0).collect();
        assert_eq!(a.forward(&obs), b.forward(&obs));
    }

    #[test]
    fn head_gains() {
        let net = PolicyNetwork::new(14, 14, &mut ChaCha8Rng::seed_from_u64(4));
        let out = net.mlp.layers.last().unwrap();
        let row_norm = |r: usize| out.row(r).iter().map(|w| w * w).sum::<f64>().sqrt();
        assert!((row_norm(0) - 0.01).abs() < 1e-12);
        assert!((row_norm(14) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sampling_follows_distribution() {
        let mut net = PolicyNetwork::zeros(2, 3);
        let out = net.mlp.layers.last_mut().unwrap();
        out.biases = vec![0.0, (3.0f64).ln(), f64::NEG_INFINITY.max(-50.0), 0.0];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut counts = [0usize; 3];
        for _ in 0..20_000 {
            counts[net.sample(&[0.0, 0.0], &mut rng).0] += 1;
        }
        let frac = counts[1] as f64 / 20_000.0;
        assert!((frac - 0.75).abs() < 0.02, "{counts:?}");
        assert_eq!(counts[2], 0);
    }
}
