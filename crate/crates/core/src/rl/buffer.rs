use serde::{Deserialize, Serialize};

/// Transitions collected by one rollout, in time order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RolloutBuffer {
    pub observations: Vec<Vec<f64>>,
    pub actions: Vec<usize>,
    pub log_probs: Vec<f64>,
    pub rewards: Vec<f64>,
    pub values: Vec<f64>,
    /// `true` when the step ended its episode at a terminal state (no
    /// bootstrapping past it).
    pub episode_ends: Vec<bool>,
    pub masks: Vec<Option<Vec<bool>>>,
    pub advantages: Option<Vec<f64>>,
    pub returns: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub observation: Vec<f64>,
    pub action: usize,
    pub log_prob: f64,
    pub reward: f64,
    pub value: f64,
    pub episode_end: bool,
    pub mask: Option<Vec<bool>>,
}

impl RolloutBuffer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, step: Step) {
        self.observations.push(step.observation);
        self.actions.push(step.action);
        self.log_probs.push(step.log_prob);
        self.rewards.push(step.reward);
        self.values.push(step.value);
        self.episode_ends.push(step.episode_end);
        self.masks.push(step.mask);
        self.advantages = None;
        self.returns = None;
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// Generalized advantage estimation. `bootstrap_value` is V of the state
    /// following the last step; it is ignored if that step is terminal.
    pub fn compute_gae(&mut self, gamma: f64, lambda: f64, bootstrap_value: f64) {
        let n = self.len();
        let mut advantages = vec![0.0; n];
        let mut running = 0.0;
        for t in (0..n).rev() {
            let live = if self.episode_ends[t] { 0.0 } else { 1.0 };
            let next_value = if t + 1 == n {
                bootstrap_value
            } else {
                self.values[t + 1]
            };
            let delta = self.rewards[t] + gamma * next_value * live - self.values[t];
            running = delta + gamma * lambda * live * running;
            advantages[t] = running;
        }
        let returns = advantages
            .iter()
            .zip(&self.values)
            .map(|(a, v)| a + v)
            .collect();
        self.advantages = Some(advantages);
        self.returns = Some(returns);
    }
}
