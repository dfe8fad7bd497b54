use super::buffer::RolloutBuffer;
use super::network::{check_mask, masked_softmax, PolicyParams};
use super::RlError;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PpoConfig {
    pub gamma: f64,
    pub gae_lambda: f64,
    pub clip_range: f64,
    pub learning_rate: f64,
    /// Steps per rollout; the session uses one episode per rollout, so this
    /// is only an upper bound on what an update receives.
    pub rollout_length: usize,
    pub minibatch_size: usize,
    pub epochs: usize,
    pub entropy_coef: f64,
    pub value_coef: f64,
    pub max_grad_norm: f64,
    pub hidden: usize,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub seed: u64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            gae_lambda: 0.95,
            clip_range: 0.2,
            learning_rate: 3e-4,
            rollout_length: 2048,
            minibatch_size: 64,
            epochs: 10,
            entropy_coef: 0.0,
            value_coef: 0.5,
            max_grad_norm: 0.5,
            hidden: 64,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-5,
            seed: 0,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<(), RlError> {
        let bad = |what: &str| Err(RlError::InvalidConfig(what.to_string()));
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad("gamma must be in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return bad("gae_lambda must be in [0, 1]");
        }
        if !(self.clip_range > 0.0) {
            return bad("clip_range must be positive");
        }
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if self.minibatch_size == 0 || self.rollout_length == 0 || self.epochs == 0 {
            return bad("rollout_length, minibatch_size and epochs must be positive");
        }
        if self.hidden == 0 {
            return bad("hidden width must be positive");
        }
        Ok(())
    }
}

/// Per-sample clipped surrogate objective `min(r·A, clip(r, 1−ε, 1+ε)·A)`.
pub fn clipped_surrogate(ratio: f64, advantage: f64, clip_range: f64) -> f64 {
    let clipped = ratio.clamp(1.0 - clip_range, 1.0 + clip_range);
    (ratio * advantage).min(clipped * advantage)
}

/// One training sample as consumed by the loss.
#[derive(Debug, Clone, Copy)]
pub struct Sample<'a> {
    pub observation: &'a [f64],
    pub mask: Option<&'a [bool]>,
    pub action: usize,
    pub old_log_prob: f64,
    pub advantage: f64,
    pub target_return: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    pub approx_kl: f64,
}

#[derive(Debug, Clone)]
pub struct LossEval {
    pub loss: f64,
    pub stats: LossStats,
    pub gradient: PolicyParams,
}

/// Total minibatch loss `policy + value_coef·value − entropy_coef·entropy`
/// (each term a mean over samples) and its exact gradient.
pub fn loss_and_gradient(
    params: &PolicyParams,
    samples: &[Sample<'_>],
    config: &PpoConfig,
) -> Result<LossEval, RlError> {
    let n = params.num_actions();
    let batch = samples.len().max(1) as f64;
    let mut gradient = params.zeros_like();
    let mut stats = LossStats::default();
    let eps = config.clip_range;

    for s in samples {
        check_mask(n, s.mask)?;
        if s.observation.len() != params.num_inputs() {
            return Err(RlError::ShapeMismatch {
                expected: params.num_inputs(),
                found: s.observation.len(),
            });
        }
        let (logits, trace_pi) = params.policy.forward_traced(s.observation);
        let probs = masked_softmax(&logits, s.mask);
        let log_prob = probs[s.action].ln();
        let ratio = (log_prob - s.old_log_prob).exp();
        let adv = s.advantage;
        let surrogate = clipped_surrogate(ratio, adv, eps);
        let entropy: f64 = -probs
            .iter()
            .filter(|p| **p > 0.0)
            .map(|p| p * p.ln())
            .sum::<f64>();

        stats.policy_loss -= surrogate / batch;
        stats.entropy += entropy / batch;
        if (ratio - 1.0).abs() > eps {
            stats.clip_fraction += 1.0 / batch;
        }
        stats.approx_kl += ((ratio - 1.0) - (log_prob - s.old_log_prob)) / batch;

        // d(-surrogate)/d log_prob: the unclipped branch carries the gradient
        // unless the clipped branch is strictly smaller and saturated.
        let unclipped = ratio * adv;
        let clipped_active = (ratio.clamp(1.0 - eps, 1.0 + eps) * adv) < unclipped;
        let saturated = ratio < 1.0 - eps || ratio > 1.0 + eps;
        let d_logp = if clipped_active && saturated {
            0.0
        } else {
            -adv * ratio
        } / batch;

        let mut d_logits = vec![0.0; n];
        for j in 0..n {
            if probs[j] == 0.0 {
                continue;
            }
            let indicator = if j == s.action { 1.0 } else { 0.0 };
            d_logits[j] += d_logp * (indicator - probs[j]);
            // loss has −entropy_coef·H; dH/dz_j = −p_j (ln p_j + H)
            d_logits[j] += config.entropy_coef * probs[j] * (probs[j].ln() + entropy) / batch;
        }
        params.policy.backward(&trace_pi, &d_logits, &mut gradient.policy);

        let (value_out, trace_v) = params.value.forward_traced(s.observation);
        let err = value_out[0] - s.target_return;
        stats.value_loss += err * err / batch;
        let d_value = config.value_coef * 2.0 * err / batch;
        params.value.backward(&trace_v, &[d_value], &mut gradient.value);
    }

    let loss =
        stats.policy_loss + config.value_coef * stats.value_loss - config.entropy_coef * stats.entropy;
    Ok(LossEval {
        loss,
        stats,
        gradient,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    first: Vec<f64>,
    second: Vec<f64>,
}

impl Adam {
    pub fn new(num_params: usize, beta1: f64, beta2: f64, eps: f64) -> Self {
        Self {
            beta1,
            beta2,
            eps,
            step: 0,
            first: vec![0.0; num_params],
            second: vec![0.0; num_params],
        }
    }

    pub fn apply(&mut self, params: &mut PolicyParams, gradient: &[f64], learning_rate: f64) {
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        for (i, p) in params.values_mut().enumerate() {
            let g = gradient[i];
            self.first[i] = self.beta1 * self.first[i] + (1.0 - self.beta1) * g;
            self.second[i] = self.beta2 * self.second[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.first[i] / bc1;
            let v_hat = self.second[i] / bc2;
            *p -= learning_rate * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

/// Owns the optimizer state and minibatch shuffling RNG across updates.
#[derive(Debug, Clone)]
pub struct PpoTrainer {
    pub config: PpoConfig,
    optimizer: Adam,
    rng: ChaCha8Rng,
}

impl PpoTrainer {
    pub fn new(config: PpoConfig, params: &PolicyParams) -> Result<Self, RlError> {
        config.validate()?;
        let optimizer = Adam::new(
            params.num_params(),
            config.adam_beta1,
            config.adam_beta2,
            config.adam_eps,
        );
        let rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5050_4f5f_7570_6474);
        Ok(Self {
            config,
            optimizer,
            rng,
        })
    }

    /// Runs `epochs` passes of shuffled minibatch Adam steps. Advantages are
    /// normalized over the whole buffer first. On a non-finite loss or
    /// gradient the parameters and optimizer are restored and an error is
    /// returned.
    pub fn update(&mut self, params: &mut PolicyParams, buffer: &RolloutBuffer) -> Result<LossStats, RlError> {
        let (Some(advantages), Some(returns)) = (&buffer.advantages, &buffer.returns) else {
            return Err(RlError::MissingAdvantages);
        };
        if buffer.is_empty() {
            return Ok(LossStats::default());
        }
        let advantages = normalize(advantages);
        let snapshot = (params.clone(), self.optimizer.clone());
        let mut indices: Vec<usize> = (0..buffer.len()).collect();
        let mut totals = LossStats::default();
        let mut batches = 0usize;

        for _ in 0..self.config.epochs {
            indices.shuffle(&mut self.rng);
            for chunk in indices.chunks(self.config.minibatch_size) {
                let samples: Vec<Sample<'_>> = chunk
                    .iter()
                    .map(|&i| Sample {
                        observation: &buffer.observations[i],
                        mask: buffer.masks[i].as_deref(),
                        action: buffer.actions[i],
                        old_log_prob: buffer.log_probs[i],
                        advantage: advantages[i],
                        target_return: returns[i],
                    })
                    .collect();
                let eval = loss_and_gradient(params, &samples, &self.config)?;
                let mut grad = eval.gradient.to_flat();
                if !eval.loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                    *params = snapshot.0;
                    self.optimizer = snapshot.1;
                    return Err(RlError::NonFiniteLoss);
                }
                clip_by_norm(&mut grad, self.config.max_grad_norm);
                self.optimizer.apply(params, &grad, self.config.learning_rate);
                totals.policy_loss += eval.stats.policy_loss;
                totals.value_loss += eval.stats.value_loss;
                totals.entropy += eval.stats.entropy;
                totals.clip_fraction += eval.stats.clip_fraction;
                totals.approx_kl += eval.stats.approx_kl;
                batches += 1;
            }
        }
        if !params.is_finite() {
            *params = snapshot.0;
            self.optimizer = snapshot.1;
            return Err(RlError::NonFiniteLoss);
        }
        let b = batches as f64;
        Ok(LossStats {
            policy_loss: totals.policy_loss / b,
            value_loss: totals.value_loss / b,
            entropy: totals.entropy / b,
            clip_fraction: totals.clip_fraction / b,
            approx_kl: totals.approx_kl / b,
        })
    }
}

fn normalize(values: &[f64]) -> Vec<f64> {
    if values.len() < 2 {
        return values.to_vec();
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    values.iter().map(|v| (v - mean) / (std + 1e-8)).collect()
}

fn clip_by_norm(grad: &mut [f64], max_norm: f64) {
    let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    let coef = max_norm / (norm + 1e-6);
    if coef < 1.0 {
        grad.iter_mut().for_each(|g| *g *= coef);
    }
}
