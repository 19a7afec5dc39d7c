/// Experience from `n_envs × horizon` steps, stored env-major: the record for
/// env `e`, step `t` lives at index `e * horizon + t`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RolloutBuffer {
    pub obs_dim: usize,
    pub n_envs: usize,
    pub horizon: usize,
    pub observations: Vec<f64>,
    pub actions: Vec<usize>,
    pub log_probs: Vec<f64>,
    pub rewards: Vec<f64>,
    pub values: Vec<f64>,
    pub dones: Vec<bool>,
    /// Value of the observation after each env's last step (ignored when
    /// that step ended an episode).
    pub bootstrap: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl RolloutBuffer {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn observation(&self, i: usize) -> &[f64] {
        &self.observations[i * self.obs_dim..(i + 1) * self.obs_dim]
    }

    pub fn compute_gae(&mut self, gamma: f64, lambda: f64) {
        assert_eq!(self.len(), self.n_envs * self.horizon, "buffer not full");
        self.advantages = vec![0.0; self.len()];
        self.returns = vec![0.0; self.len()];
        for e in 0..self.n_envs {
            let r = e * self.horizon..(e + 1) * self.horizon;
            let (adv, ret) = gae(
                &self.rewards[r.clone()],
                &self.values[r.clone()],
                &self.dones[r.clone()],
                self.bootstrap[e],
                gamma,
                lambda,
            );
            self.advantages[r.clone()].copy_from_slice(&adv);
            self.returns[r].copy_from_slice(&ret);
        }
    }
}

/// Generalised advantage estimation over one env's trajectory segment.
/// `dones[t]` marks that step `t` ended an episode, so `values[t + 1]` (or
/// `bootstrap` at the end) belongs to a new episode and is masked out.
pub fn gae(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    bootstrap: f64,
    gamma: f64,
    lambda: f64,
) -> (Vec<f64>, Vec<f64>) {
    let n = rewards.len();
    let mut adv = vec![0.0; n];
    let mut next_adv = 0.0;
    for t in (0..n).rev() {
        let next_value = if t + 1 < n { values[t + 1] } else { bootstrap };
        let mask = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gamma * next_value * mask - values[t];
        next_adv = delta + gamma * lambda * mask * next_adv;
        adv[t] = next_adv;
    }
    let ret = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    (adv, ret)
}

/// Shift and scale to zero mean and unit variance (population std, plus a
/// small epsilon).
pub fn normalize(values: &[f64]) -> Vec<f64> {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt() + 1e-8;
    values.iter().map(|v| (v - mean) / std).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_step_hand_recursion() {
        let (adv, ret) = gae(&[1.0, 1.0], &[0.0, 0.0], &[false, false], 0.0, 0.99, 0.95);
        assert!((adv[1] - 1.0).abs() < 1e-12);
        assert!((adv[0] - 1.9405).abs() < 1e-12);
        assert_eq!(adv, ret);
    }

    #[test]
    fn one_step_td_when_lambda_zero() {
        let (adv, _) = gae(&[0.5], &[2.0], &[false], 3.0, 0.9, 0.0);
        assert!((adv[0] - (0.5 + 0.9 * 3.0 - 2.0)).abs() < 1e-12);
    }

    #[test]
    fn terminal_masks_bootstrap() {
        let (adv, _) = gae(&[0.5, 2.0], &[2.0, 1.0], &[true, false], 7.0, 0.9, 0.95);
        assert!((adv[0] - (0.5 - 2.0)).abs() < 1e-12);
        assert!((adv[1] - (2.0 + 0.9 * 7.0 - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn normalized_moments() {
        let z = normalize(&[1.0, 2.0, 3.0, 10.0]);
        let mean = z.iter().sum::<f64>() / 4.0;
        let var = z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 4.0;
        assert!(mean.abs() < 1e-12);
        assert!((var - 1.0).abs() < 1e-6);
    }
}
