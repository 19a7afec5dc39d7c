use serde::{Deserialize, Serialize};

use super::nn::Mlp;

/// Adam with bias correction; moments shaped like the parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub t: u64,
    pub m: Mlp,
    pub v: Mlp,
}

impl Adam {
    pub fn new(params: &Mlp, learning_rate: f64) -> Self {
        Adam {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            t: 0,
            m: params.zeros_like(),
            v: params.zeros_like(),
        }
    }

    /// Descend: `params -= lr * m_hat / (sqrt(v_hat) + eps)`.
    pub fn step(&mut self, params: &mut Mlp, grads: &Mlp) {
        self.t += 1;
        let (b1, b2) = (self.beta1, self.beta2);
        let c1 = 1.0 - b1.powi(self.t as i32);
        let c2 = 1.0 - b2.powi(self.t as i32);
        let step = self.learning_rate;
        let eps = self.epsilon;
        for (((p, g), m), v) in params
            .params_mut()
            .zip(grads.params())
            .zip(self.m.params_mut())
            .zip(self.v.params_mut())
        {
            for i in 0..p.len() {
                m[i] = b1 * m[i] + (1.0 - b1) * g[i];
                v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                p[i] -= step * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }
}

/// Scale `grads` so its global L2 norm is at most `max_norm`; returns the
/// norm before clipping.
pub fn clip_grad_norm(grads: &mut Mlp, max_norm: f64) -> f64 {
    let norm = grads.norm();
    if norm > max_norm {
        grads.scale(max_norm / (norm + 1e-6));
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut p = Mlp::zeros(&[2, 1]);
        let mut g = p.zeros_like();
        g.layers[0].weights = vec![3.0, -0.5];
        g.layers[0].biases = vec![0.0];
        let mut adam = Adam::new(&p, 0.01);
        adam.step(&mut p, &g);
        // m_hat = g, v_hat = g^2, so the step is lr * sign(g) up to eps.
        assert!((p.layers[0].weights[0] + 0.01).abs() < 1e-9);
        assert!((p.layers[0].weights[1] - 0.01).abs() < 1e-9);
        assert_eq!(p.layers[0].biases[0], 0.0);
    }

    #[test]
    fn clipping_bounds_norm() {
        let mut g = Mlp::zeros(&[2, 2]);
        g.layers[0].weights = vec![3.0, 4.0, 0.0, 0.0];
        let before = clip_grad_norm(&mut g, 0.5);
        assert!((before - 5.0).abs() < 1e-12);
        assert!((g.norm() - 0.5).abs() < 1e-6);
        let mut small = Mlp::zeros(&[2, 2]);
        small.layers[0].weights = vec![0.1, 0.0, 0.0, 0.0];
        clip_grad_norm(&mut small, 0.5);
        assert_eq!(small.layers[0].weights[0], 0.1);
    }
}
