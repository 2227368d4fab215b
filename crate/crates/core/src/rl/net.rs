//! Single-hidden-layer tanh network with hand-written backpropagation.

use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub inputs: usize,
    pub hidden: usize,
    pub outputs: usize,
    /// Row-major `hidden x inputs`.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    /// Row-major `outputs x hidden`.
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

pub struct Forward {
    pub hidden: Vec<f64>,
    pub out: Vec<f64>,
}

impl Mlp {
    /// Weights uniform in `[-scale, scale]`, biases zero.
    pub fn new(
        inputs: usize,
        hidden: usize,
        outputs: usize,
        scale: f64,
        rng: &mut impl Rng,
    ) -> Mlp {
        let mut draw = |n: usize| {
            (0..n)
                .map(|_| rng.random_range(-scale..=scale))
                .collect::<Vec<f64>>()
        };
        let w1 = draw(hidden * inputs);
        let w2 = draw(outputs * hidden);
        Mlp {
            inputs,
            hidden,
            outputs,
            w1,
            b1: vec![0.0; hidden],
            w2,
            b2: vec![0.0; outputs],
        }
    }

    pub fn forward(&self, x: &[f64]) -> Forward {
        debug_assert_eq!(x.len(), self.inputs);
        let hidden: Vec<f64> = (0..self.hidden)
            .map(|j| {
                let row = &self.w1[j * self.inputs..(j + 1) * self.inputs];
                (row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.b1[j]).tanh()
            })
            .collect();
        let out = (0..self.outputs)
            .map(|k| {
                let row = &self.w2[k * self.hidden..(k + 1) * self.hidden];
                row.iter().zip(&hidden).map(|(w, h)| w * h).sum::<f64>() + self.b2[k]
            })
            .collect();
        Forward { hidden, out }
    }

    pub fn param_count(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()
    }

    /// Parameters flattened as w1, b1, w2, b2.
    pub fn params(&self) -> Vec<f64> {
        [&self.w1[..], &self.b1, &self.w2, &self.b2].concat()
    }

    pub fn set_params(&mut self, p: &[f64]) {
        assert_eq!(p.len(), self.param_count());
        let (a, rest) = p.split_at(self.w1.len());
        let (b, rest) = rest.split_at(self.b1.len());
        let (c, d) = rest.split_at(self.w2.len());
        self.w1.copy_from_slice(a);
        self.b1.copy_from_slice(b);
        self.w2.copy_from_slice(c);
        self.b2.copy_from_slice(d);
    }

    /// Gradient of a scalar whose derivative with respect to the outputs is
    /// `dout`, flattened like [`Mlp::params`].
    pub fn backward(&self, x: &[f64], fwd: &Forward, dout: &[f64]) -> Vec<f64> {
        let mut g_w1 = vec![0.0; self.w1.len()];
        let mut g_b1 = vec![0.0; self.hidden];
        let mut g_w2 = vec![0.0; self.w2.len()];
        for k in 0..self.outputs {
            for j in 0..self.hidden {
                g_w2[k * self.hidden + j] = dout[k] * fwd.hidden[j];
            }
        }
        for j in 0..self.hidden {
            let dh: f64 = (0..self.outputs)
                .map(|k| dout[k] * self.w2[k * self.hidden + j])
                .sum();
            let dz = dh * (1.0 - fwd.hidden[j] * fwd.hidden[j]);
            g_b1[j] = dz;
            for i in 0..self.inputs {
                g_w1[j * self.inputs + i] = dz * x[i];
            }
        }
        [g_w1, g_b1, g_w2, dout.to_vec()].concat()
    }

    /// `params += scale * grad`.
    pub fn step(&mut self, grad: &[f64], scale: f64) {
        let p: Vec<f64> = self
            .params()
            .iter()
            .zip(grad)
            .map(|(p, g)| p + scale * g)
            .collect();
        self.set_params(&p);
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.iter().map(|e| e / total).collect()
}

/// Actor: logits over actions, softmax policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyNet(pub Mlp);

impl PolicyNet {
    pub fn probs(&self, x: &[f64]) -> Vec<f64> {
        softmax(&self.0.forward(x).out)
    }

    pub fn log_prob(&self, x: &[f64], action: usize) -> f64 {
        self.probs(x)[action].ln()
    }

    /// Gradient of `log pi(action | x)`.
    pub fn log_prob_grad(&self, x: &[f64], action: usize) -> Vec<f64> {
        let fwd = self.0.forward(x);
        let p = softmax(&fwd.out);
        let dout: Vec<f64> = p
            .iter()
            .enumerate()
            .map(|(k, pk)| if k == action { 1.0 - pk } else { -pk })
            .collect();
        self.0.backward(x, &fwd, &dout)
    }
}

/// Critic: one scalar state value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueNet(pub Mlp);

impl ValueNet {
    pub fn value(&self, x: &[f64]) -> f64 {
        self.0.forward(x).out[0]
    }

    pub fn value_grad(&self, x: &[f64]) -> Vec<f64> {
        let fwd = self.0.forward(x);
        self.0.backward(x, &fwd, &[1.0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn softmax_is_a_distribution() {
        let p = softmax(&[1000.0, 0.0, -1000.0]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p[0] > 0.999 && p.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn params_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut m = Mlp::new(3, 4, 2, 0.1, &mut rng);
        let p = m.params();
        assert_eq!(p.len(), 3 * 4 + 4 + 4 * 2 + 2);
        assert!(m.w1.iter().all(|w| w.abs() <= 0.1));
        m.set_params(&p);
        assert_eq!(m.params(), p);
    }
}
