use super::RlError;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Fully connected layer with a row-major `out × in` weight matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    /// Orthogonal initialization scaled by `gain`, zero bias.
    pub fn orthogonal<R: Rng + ?Sized>(inputs: usize, outputs: usize, gain: f64, rng: &mut R) -> Self {
        let mut layer = Self::zeros(inputs, outputs);
        // Orthonormalize the longer dimension's vectors of a gaussian matrix;
        // rows when there are at most as many rows as columns.
        let (count, dim) = if outputs <= inputs {
            (outputs, inputs)
        } else {
            (inputs, outputs)
        };
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(count);
        while basis.len() < count {
            let mut v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
            for b in &basis {
                let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= dot * y);
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-8 {
                v.iter_mut().for_each(|x| *x /= norm);
                basis.push(v);
            }
        }
        for o in 0..outputs {
            for i in 0..inputs {
                let w = if outputs <= inputs {
                    basis[o][i]
                } else {
                    basis[i][o]
                };
                layer.weights[o * inputs + i] = gain * w;
            }
        }
        layer
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.outputs)
            .map(|o| {
                let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
                self.bias[o] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
            })
            .collect()
    }

    fn num_params(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

/// Multi-layer perceptron: tanh on every hidden layer, linear output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

/// Activations recorded by a forward pass, consumed by [`Mlp::backward`].
pub struct Trace {
    /// `activations[0]` is the input, `activations[k]` the output of layer `k-1`.
    activations: Vec<Vec<f64>>,
}

impl Mlp {
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], hidden_gain: f64, output_gain: f64, rng: &mut R) -> Self {
        let last = sizes.len() - 2;
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(k, w)| {
                let gain = if k == last { output_gain } else { hidden_gain };
                Dense::orthogonal(w[0], w[1], gain, rng)
            })
            .collect();
        Self { layers }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.outputs)
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.forward_traced(x).0
    }

    pub fn forward_traced(&self, x: &[f64]) -> (Vec<f64>, Trace) {
        let mut activations = vec![x.to_vec()];
        let last = self.layers.len() - 1;
        for (k, layer) in self.layers.iter().enumerate() {
            let mut out = layer.apply(activations.last().unwrap());
            if k != last {
                out.iter_mut().for_each(|v| *v = v.tanh());
            }
            activations.push(out);
        }
        let out = activations.last().unwrap().clone();
        (out, Trace { activations })
    }

    /// Accumulates the gradient of a scalar loss into `grads`, given the loss
    /// gradient with respect to the network output.
    pub fn backward(&self, trace: &Trace, grad_out: &[f64], grads: &mut Mlp) {
        let mut delta = grad_out.to_vec();
        let last = self.layers.len() - 1;
        for k in (0..self.layers.len()).rev() {
            let layer = &self.layers[k];
            let input = &trace.activations[k];
            if k != last {
                // output of this layer went through tanh
                let out = &trace.activations[k + 1];
                delta.iter_mut().zip(out).for_each(|(d, y)| *d *= 1.0 - y * y);
            }
            let g = &mut grads.layers[k];
            for o in 0..layer.outputs {
                g.bias[o] += delta[o];
                let row = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
                row.iter_mut().zip(input).for_each(|(w, x)| *w += delta[o] * x);
            }
            if k > 0 {
                let mut next = vec![0.0; layer.inputs];
                for o in 0..layer.outputs {
                    let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    next.iter_mut().zip(row).for_each(|(n, w)| *n += delta[o] * w);
                }
                delta = next;
            }
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            layers: self
                .layers
                .iter()
                .map(|l| Dense::zeros(l.inputs, l.outputs))
                .collect(),
        }
    }

    fn num_params(&self) -> usize {
        self.layers.iter().map(Dense::num_params).sum()
    }

    fn values(&self) -> impl Iterator<Item = &f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.bias.iter()))
    }

    fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.bias.iter_mut()))
    }
}

/// Separate policy and value networks over the same observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    pub policy: Mlp,
    pub value: Mlp,
}

impl PolicyParams {
    /// Two tanh hidden layers of width `hidden`; orthogonal init with gain
    /// √2 on hidden layers, 0.01 on the policy head and 1 on the value head.
    pub fn new<R: Rng + ?Sized>(num_actions: usize, hidden: usize, rng: &mut R) -> Self {
        let sizes_pi = [num_actions, hidden, hidden, num_actions];
        let sizes_v = [num_actions, hidden, hidden, 1];
        let g = std::f64::consts::SQRT_2;
        Self {
            policy: Mlp::new(&sizes_pi, g, 0.01, rng),
            value: Mlp::new(&sizes_v, g, 1.0, rng),
        }
    }

    pub fn num_inputs(&self) -> usize {
        self.policy.input_dim()
    }

    pub fn num_actions(&self) -> usize {
        self.policy.output_dim()
    }

    pub fn hidden(&self) -> usize {
        self.policy.layers[0].outputs
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            policy: self.policy.zeros_like(),
            value: self.value.zeros_like(),
        }
    }

    pub fn num_params(&self) -> usize {
        self.policy.num_params() + self.value.num_params()
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.policy.values().chain(self.value.values()).copied().collect()
    }

    pub fn set_flat(&mut self, flat: &[f64]) -> Result<(), RlError> {
        if flat.len() != self.num_params() {
            return Err(RlError::ShapeMismatch {
                expected: self.num_params(),
                found: flat.len(),
            });
        }
        self.values_mut().zip(flat).for_each(|(p, v)| *p = *v);
        Ok(())
    }

    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.policy.values_mut().chain(self.value.values_mut())
    }

    pub fn is_finite(&self) -> bool {
        self.policy.values().chain(self.value.values()).all(|v| v.is_finite())
    }

    /// Checks that layer shapes chain correctly for `n` inputs/actions.
    pub fn check_shapes(&self, n: usize) -> Result<(), RlError> {
        for net in [&self.policy, &self.value] {
            let mut dim = n;
            for layer in &net.layers {
                if layer.inputs != dim
                    || layer.weights.len() != layer.inputs * layer.outputs
                    || layer.bias.len() != layer.outputs
                {
                    return Err(RlError::ShapeMismatch {
                        expected: dim,
                        found: layer.inputs,
                    });
                }
                dim = layer.outputs;
            }
        }
        if self.policy.output_dim() != n || self.value.output_dim() != 1 {
            return Err(RlError::ShapeMismatch {
                expected: n,
                found: self.policy.output_dim(),
            });
        }
        Ok(())
    }
}

/// Numerically stable softmax; `None` entries of the mask are treated as
/// allowed. Masked-out actions get probability exactly zero.
pub(crate) fn masked_softmax(logits: &[f64], mask: Option<&[bool]>) -> Vec<f64> {
    let allowed = |i: usize| mask.is_none_or(|m| m[i]);
    let max = logits
        .iter()
        .enumerate()
        .filter(|(i, _)| allowed(*i))
        .map(|(_, v)| *v)
        .fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits
        .iter()
        .enumerate()
        .map(|(i, v)| if allowed(i) { (v - max).exp() } else { 0.0 })
        .collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

pub(crate) fn check_mask(n: usize, mask: Option<&[bool]>) -> Result<(), RlError> {
    if let Some(m) = mask {
        if m.len() != n {
            return Err(RlError::ShapeMismatch {
                expected: n,
                found: m.len(),
            });
        }
        if !m.iter().any(|&b| b) {
            return Err(RlError::EmptyMask);
        }
    }
    Ok(())
}

/// Action distribution and state-value estimate for one observation.
pub fn policy_forward(
    params: &PolicyParams,
    obs: &[f64],
    mask: Option<&[bool]>,
) -> Result<(Vec<f64>, f64), RlError> {
    let n = params.num_inputs();
    if obs.len() != n {
        return Err(RlError::ShapeMismatch {
            expected: n,
            found: obs.len(),
        });
    }
    check_mask(params.num_actions(), mask)?;
    let logits = params.policy.forward(obs);
    let value = params.value.forward(obs)[0];
    Ok((masked_softmax(&logits, mask), value))
}

/// Draws one action from a categorical distribution.
pub fn sample_action<R: Rng + ?Sized>(probabilities: &[f64], rng: &mut R) -> (usize, f64) {
    let u: f64 = rng.gen();
    let mut cumulative = 0.0;
    let mut chosen = None;
    for (i, &p) in probabilities.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        chosen = Some(i);
        cumulative += p;
        if u < cumulative {
            break;
        }
    }
    let action = chosen.expect("distribution with no positive mass");
    (action, probabilities[action].ln())
}
