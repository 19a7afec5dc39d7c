//! Fully connected ReLU networks with hand-written backpropagation.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Affine layer `y = W x + b`, `W` stored row-major as `outputs × inputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Dense {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            biases: vec![0.0; outputs],
        }
    }

    pub fn row(&self, o: usize) -> &[f64] {
        &self.weights[o * self.inputs..(o + 1) * self.inputs]
    }
}

/// `rows × cols` matrix with orthonormal rows (or columns, when
/// `rows > cols`) scaled by `gain`, from Gram-Schmidt on Gaussian samples.
pub fn orthogonal<R: Rng + ?Sized>(rows: usize, cols: usize, gain: f64, rng: &mut R) -> Vec<f64> {
    let (n, dim) = if rows <= cols {
        (rows, cols)
    } else {
        (cols, rows)
    };
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n);
    while basis.len() < n {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        for b in &basis {
            let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= dot * y);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-8 {
            continue;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        basis.push(v);
    }
    let mut out = vec![0.0; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            let value = if rows <= cols {
                basis[r][c]
            } else {
                basis[c][r]
            };
            out[r * cols + c] = gain * value;
        }
    }
    out
}

/// Multilayer perceptron: ReLU after every layer except the last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

/// Activations saved by [`Mlp::forward_batch`] for the backward pass.
#[derive(Debug, Clone)]
pub struct Trace {
    pub batch: usize,
    /// `inputs[l]` is the (batch × width) input of layer `l`; the last entry
    /// is the network output.
    pub inputs: Vec<Vec<f64>>,
}

impl Trace {
    pub fn output(&self) -> &[f64] {
        self.inputs.last().expect("empty trace")
    }
}

impl Mlp {
    pub fn zeros(sizes: &[usize]) -> Self {
        assert!(
            sizes.len() >= 2,
            "need at least an input and an output size"
        );
        Mlp {
            layers: sizes.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect(),
        }
    }

    /// Orthogonal initialisation: gain sqrt(2) on hidden layers and
    /// `output_gain` on the output layer, zero biases.
    pub fn orthogonal<R: Rng + ?Sized>(sizes: &[usize], output_gain: f64, rng: &mut R) -> Self {
        let mut net = Self::zeros(sizes);
        let last = net.layers.len() - 1;
        for (l, layer) in net.layers.iter_mut().enumerate() {
            let gain = if l == last {
                output_gain
            } else {
                std::f64::consts::SQRT_2
            };
            layer.weights = orthogonal(layer.outputs, layer.inputs, gain, rng);
        }
        net
    }

    pub fn input_size(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_size(&self) -> usize {
        self.layers.last().unwrap().outputs
    }

    /// `(outputs, inputs)` for each layer.
    pub fn shapes(&self) -> Vec<[usize; 2]> {
        self.layers.iter().map(|l| [l.outputs, l.inputs]).collect()
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    pub fn is_finite(&self) -> bool {
        self.params().all(|p| p.iter().all(|v| v.is_finite()))
    }

    /// Parameter slices in a fixed order: weights then biases, layer by layer.
    pub fn params(&self) -> impl Iterator<Item = &[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weights.as_slice(), l.biases.as_slice()])
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weights.as_mut_slice(), l.biases.as_mut_slice()])
    }

    pub fn zeros_like(&self) -> Self {
        Mlp {
            layers: self
                .layers
                .iter()
                .map(|l| Dense::zeros(l.inputs, l.outputs))
                .collect(),
        }
    }

    pub fn fill(&mut self, value: f64) {
        self.params_mut().for_each(|p| p.fill(value));
    }

    pub fn norm(&self) -> f64 {
        self.params()
            .flat_map(|p| p.iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale(&mut self, factor: f64) {
        self.params_mut()
            .for_each(|p| p.iter_mut().for_each(|v| *v *= factor));
    }

    pub fn copy_from(&mut self, other: &Mlp) {
        for (dst, src) in self.params_mut().zip(other.params()) {
            dst.copy_from_slice(src);
        }
    }

    pub fn forward(&self, input: &[f64]) -> Vec<f64> {
        debug_assert_eq!(input.len(), self.input_size());
        let mut x = input.to_vec();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let mut y = layer.biases.clone();
            for (o, yo) in y.iter_mut().enumerate() {
                *yo += dot(layer.row(o), &x);
            }
            if l != last {
                y.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            x = y;
        }
        x
    }

    /// Forward a row-major `batch × input_size` block, keeping activations.
    pub fn forward_batch(&self, input: &[f64], batch: usize) -> Trace {
        debug_assert_eq!(input.len(), batch * self.input_size());
        let mut inputs = Vec::with_capacity(self.layers.len() + 1);
        inputs.push(input.to_vec());
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let x = inputs.last().unwrap();
            let mut y = vec![0.0; batch * layer.outputs];
            for b in 0..batch {
                let xb = &x[b * layer.inputs..(b + 1) * layer.inputs];
                let yb = &mut y[b * layer.outputs..(b + 1) * layer.outputs];
                for (o, yo) in yb.iter_mut().enumerate() {
                    let v = layer.biases[o] + dot(layer.row(o), xb);
                    *yo = if l != last { v.max(0.0) } else { v };
                }
            }
            inputs.push(y);
        }
        Trace { batch, inputs }
    }

    /// Accumulate into `grads` the gradient of a scalar whose derivative with
    /// respect to the network output is `d_out` (batch × output_size).
    pub fn backward(&self, trace: &Trace, d_out: &[f64], grads: &mut Mlp) {
        let batch = trace.batch;
        let mut delta = d_out.to_vec();
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let g = &mut grads.layers[l];
            let x = &trace.inputs[l];
            for b in 0..batch {
                let xb = &x[b * layer.inputs..(b + 1) * layer.inputs];
                let db = &delta[b * layer.outputs..(b + 1) * layer.outputs];
                for (o, &d) in db.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    g.biases[o] += d;
                    let row = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    row.iter_mut().zip(xb).for_each(|(w, xi)| *w += d * xi);
                }
            }
            if l == 0 {
                break;
            }
            let mut prev = vec![0.0; batch * layer.inputs];
            for b in 0..batch {
                let db = &delta[b * layer.outputs..(b + 1) * layer.outputs];
                let pb = &mut prev[b * layer.inputs..(b + 1) * layer.inputs];
                for (o, &d) in db.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    pb.iter_mut()
                        .zip(layer.row(o))
                        .for_each(|(p, w)| *p += d * w);
                }
                // ReLU: the stored input of layer l is the post-activation of l-1.
                let xb = &x[b * layer.inputs..(b + 1) * layer.inputs];
                pb.iter_mut().zip(xb).for_each(|(p, &a)| {
                    if a <= 0.0 {
                        *p = 0.0
                    }
                });
            }
            delta = prev;
        }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / sum).collect()
}

pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    logits.iter().map(|l| l - lse).collect()
}

pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn orthogonal_rows_are_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for (r, c) in [(4, 9), (9, 4), (6, 6)] {
            let w = orthogonal(r, c, 1.0, &mut rng);
            // Check whichever of rows or columns form the orthonormal set.
            let (n, dim) = if r <= c { (r, c) } else { (c, r) };
            let get = |i: usize, k: usize| if r <= c { w[i * c + k] } else { w[k * c + i] };
            for i in 0..n {
                for j in 0..n {
                    let d: f64 = (0..dim).map(|k| get(i, k) * get(j, k)).sum();
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((d - want).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn batch_forward_matches_single() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let net = Mlp::orthogonal(&[5, 8, 8, 3], 1.0, &mut rng);
        let xs: Vec<f64> = (0..15).map(|i| (i as f64 * 0.37).sin()).collect();
        let trace = net.forward_batch(&xs, 3);
        for b in 0..3 {
            let y = net.forward(&xs[b * 5..(b + 1) * 5]);
            assert_eq!(&trace.output()[b * 3..(b + 1) * 3], y.as_slice());
        }
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut net = Mlp::orthogonal(&[4, 6, 5, 2], 1.0, &mut rng);
        net.layers
            .iter_mut()
            .for_each(|l| l.biases.iter_mut().for_each(|b| *b = 0.1));
        let xs = [0.3, -0.7, 0.2, 0.9, -0.1, 0.4, 0.5, -0.6];
        let w = [0.7, -1.3, 0.4, 2.0];
        let f = |n: &Mlp| -> f64 {
            let t = n.forward_batch(&xs, 2);
            t.output().iter().zip(&w).map(|(y, c)| c * y).sum()
        };
        let mut grads = net.zeros_like();
        net.backward(&net.forward_batch(&xs, 2), &w, &mut grads);
        let h = 1e-6;
        for l in 0..net.layers.len() {
            for k in 0..net.layers[l].weights.len() {
                let mut p = net.clone();
                p.layers[l].weights[k] += h;
                let mut m = net.clone();
                m.layers[l].weights[k] -= h;
                let fd = (f(&p) - f(&m)) / (2.0 * h);
                assert!((fd - grads.layers[l].weights[k]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn softmax_is_normalised() {
        let p = softmax(&[1000.0, 0.0, -5.0]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let lp = log_softmax(&[0.5, 0.1, -2.0]);
        let p = softmax(&[0.5, 0.1, -2.0]);
        for (a, b) in lp.iter().zip(&p) {
            assert!((a.exp() - b).abs() < 1e-12);
        }
    }
}
