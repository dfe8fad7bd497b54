//! Curiosity-driven choice of the next operation to test.
//!
//! The observation is one success counter per operation. A first success of
//! an operation within an episode earns a large reward, a repeated success a
//! moderate penalty and any rejection a mild one, so the policy is pushed
//! towards operations it has not managed to exercise yet.

use crate::rl::{policy_forward, sample_action, LossStats, PolicyParams, PpoConfig, PpoTrainer, RlError, RolloutBuffer, Step};
use rand::Rng;
use serde::{Deserialize, Serialize};

pub const COUNTER_CAP: u32 = 20;
pub const STEPS_PER_OPERATION: usize = 20;
pub const FIRST_SUCCESS_REWARD: f64 = 1000.0;
pub const REPEAT_SUCCESS_REWARD: f64 = -100.0;
pub const REJECTION_REWARD: f64 = -1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OutcomeClass {
    Success2xx,
    ClientError4xx,
    ServerError5xx,
    TransportError,
}

impl OutcomeClass {
    /// 1xx and 3xx have no class of their own and count as rejections.
    pub fn from_status(status: u16) -> Self {
        match status / 100 {
            2 => Self::Success2xx,
            5 => Self::ServerError5xx,
            _ => Self::ClientError4xx,
        }
    }

    pub fn is_success(self) -> bool {
        self == Self::Success2xx
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StateObservation {
    counters: Vec<u32>,
}

impl StateObservation {
    pub fn zeros(num_operations: usize) -> Self {
        Self {
            counters: vec![0; num_operations],
        }
    }

    /// Builds an observation, clamping each counter to [`COUNTER_CAP`].
    pub fn from_counters(counters: Vec<u32>) -> Self {
        Self {
            counters: counters.into_iter().map(|c| c.min(COUNTER_CAP)).collect(),
        }
    }

    pub fn counters(&self) -> &[u32] {
        &self.counters
    }

    pub fn len(&self) -> usize {
        self.counters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counters.is_empty()
    }

    /// Network input: counters scaled into [0, 1].
    pub fn encode(&self) -> Vec<f64> {
        self.counters
            .iter()
            .map(|&c| f64::from(c) / f64::from(COUNTER_CAP))
            .collect()
    }
}

pub fn compute_reward(prev: &StateObservation, op: usize, outcome: OutcomeClass) -> f64 {
    match outcome {
        OutcomeClass::Success2xx if prev.counters[op] == 0 => FIRST_SUCCESS_REWARD,
        OutcomeClass::Success2xx => REPEAT_SUCCESS_REWARD,
        _ => REJECTION_REWARD,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub observation: StateObservation,
    /// Raised when a success lands on a counter already at the cap.
    pub truncated: bool,
}

pub fn transition(obs: &StateObservation, op: usize, outcome: OutcomeClass) -> Transition {
    let mut next = obs.clone();
    let mut truncated = false;
    if outcome.is_success() {
        if next.counters[op] >= COUNTER_CAP {
            truncated = true;
        } else {
            next.counters[op] += 1;
        }
    }
    Transition {
        observation: next,
        truncated,
    }
}

pub fn episode_length(num_operations: usize) -> usize {
    STEPS_PER_OPERATION * num_operations
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeState {
    pub step_count: usize,
    pub ep_length: usize,
    pub truncated: bool,
}

/// Samples the next operation from the policy over the normalized observation.
pub fn select_operation<R: Rng + ?Sized>(obs: &StateObservation, params: &PolicyParams, rng: &mut R) -> usize {
    let (probs, _) = policy_forward(params, &obs.encode(), None).expect("observation sized for policy");
    sample_action(&probs, rng).0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("request budget exhausted")]
pub struct BudgetExhausted;

/// What the explorer drives: one call to `step` tests one operation.
pub trait Environment {
    fn num_operations(&self) -> usize;
    /// Invoked before the first step of each episode.
    fn begin_episode(&mut self);
    fn step(&mut self, op: usize) -> Result<OutcomeClass, BudgetExhausted>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EpisodeEnd {
    Completed,
    Truncated,
    BudgetExhausted,
}

#[derive(Debug, Clone)]
pub struct Episode {
    pub buffer: RolloutBuffer,
    pub state: EpisodeState,
    pub end: EpisodeEnd,
    pub final_observation: StateObservation,
    pub actions: Vec<usize>,
    pub rewards: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExplorerKind {
    #[default]
    Ppo,
    /// Ablation: operations drawn uniformly, no learning.
    Uniform,
}

pub struct Explorer {
    kind: ExplorerKind,
    params: PolicyParams,
    trainer: PpoTrainer,
    num_operations: usize,
}

impl Explorer {
    pub fn new<R: Rng + ?Sized>(
        num_operations: usize,
        config: PpoConfig,
        kind: ExplorerKind,
        rng: &mut R,
    ) -> Result<Self, RlError> {
        let params = PolicyParams::new(num_operations, config.hidden, rng);
        Self::with_params(params, config, kind)
    }

    pub fn with_params(params: PolicyParams, config: PpoConfig, kind: ExplorerKind) -> Result<Self, RlError> {
        let trainer = PpoTrainer::new(config, &params)?;
        Ok(Self {
            kind,
            num_operations: params.num_actions(),
            params,
            trainer,
        })
    }

    pub fn kind(&self) -> ExplorerKind {
        self.kind
    }

    pub fn params(&self) -> &PolicyParams {
        &self.params
    }

    pub fn config(&self) -> &PpoConfig {
        &self.trainer.config
    }

    fn choose<R: Rng + ?Sized>(&self, obs: &StateObservation, rng: &mut R) -> (usize, f64, f64) {
        let encoded = obs.encode();
        let (probs, value) = policy_forward(&self.params, &encoded, None).expect("observation sized for policy");
        match self.kind {
            ExplorerKind::Ppo => {
                let (op, log_prob) = sample_action(&probs, rng);
                (op, log_prob, value)
            }
            ExplorerKind::Uniform => {
                let op = rng.gen_range(0..self.num_operations);
                (op, -(self.num_operations as f64).ln(), value)
            }
        }
    }

    /// Runs one episode from the all-zero observation: at most
    /// `20 · num_operations` steps, cut short by counter-cap truncation or
    /// by the environment running out of budget.
    pub fn run_episode<E, R>(&mut self, env: &mut E, rng: &mut R) -> Episode
    where
        E: Environment + ?Sized,
        R: Rng + ?Sized,
    {
        let n = env.num_operations();
        assert_eq!(n, self.num_operations, "environment/policy size mismatch");
        let ep_length = episode_length(n);
        let mut obs = StateObservation::zeros(n);
        let mut buffer = RolloutBuffer::new();
        let mut actions = Vec::new();
        let mut rewards = Vec::new();
        let mut end = EpisodeEnd::Completed;
        let mut truncated = false;
        env.begin_episode();
        while buffer.len() < ep_length {
            let (op, log_prob, value) = self.choose(&obs, rng);
            let Ok(outcome) = env.step(op) else {
                end = EpisodeEnd::BudgetExhausted;
                break;
            };
            let reward = compute_reward(&obs, op, outcome);
            let next = transition(&obs, op, outcome);
            buffer.push(Step {
                observation: obs.encode(),
                action: op,
                log_prob,
                reward,
                value,
                episode_end: false,
                mask: None,
            });
            actions.push(op);
            rewards.push(reward);
            obs = next.observation;
            if next.truncated {
                truncated = true;
                end = EpisodeEnd::Truncated;
                break;
            }
        }
        Episode {
            state: EpisodeState {
                step_count: buffer.len(),
                ep_length,
                truncated,
            },
            buffer,
            end,
            final_observation: obs,
            actions,
            rewards,
        }
    }

    /// One PPO update on a finished episode, bootstrapping from the value of
    /// the final observation. No-op for the uniform ablation or an empty
    /// episode.
    pub fn learn(&mut self, episode: &mut Episode) -> Result<Option<LossStats>, RlError> {
        if self.kind == ExplorerKind::Uniform || episode.buffer.is_empty() {
            return Ok(None);
        }
        let (_, bootstrap) = policy_forward(&self.params, &episode.final_observation.encode(), None)?;
        let cfg = &self.trainer.config;
        episode.buffer.compute_gae(cfg.gamma, cfg.gae_lambda, bootstrap);
        self.trainer.update(&mut self.params, &episode.buffer).map(Some)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn obs(c: &[u32]) -> StateObservation {
        StateObservation::from_counters(c.to_vec())
    }

    #[test]
    fn reward_table() {
        let o = obs(&[0, 1, 0]);
        assert_eq!(compute_reward(&o, 0, OutcomeClass::Success2xx), 1000.0);
        assert_eq!(compute_reward(&o, 1, OutcomeClass::Success2xx), -100.0);
        for bad in [
            OutcomeClass::ClientError4xx,
            OutcomeClass::ServerError5xx,
            OutcomeClass::TransportError,
        ] {
            for op in 0..3 {
                assert_eq!(compute_reward(&o, op, bad), -1.0);
            }
        }
    }

    #[test]
    fn transitions() {
        let o = obs(&[0, 1, 0]);
        let t = transition(&o, 0, OutcomeClass::Success2xx);
        assert_eq!(t.observation, obs(&[1, 1, 0]));
        assert!(!t.truncated);
        let t = transition(&o, 2, OutcomeClass::ClientError4xx);
        assert_eq!(t.observation, o);
        let t = transition(&obs(&[20, 0, 0]), 0, OutcomeClass::Success2xx);
        assert_eq!(t.observation, obs(&[20, 0, 0]));
        assert!(t.truncated);
    }

    #[test]
    fn counters_are_clamped() {
        assert_eq!(obs(&[25, 3]).counters(), &[20, 3]);
        assert_eq!(obs(&[20, 0]).encode(), vec![1.0, 0.0]);
    }

    #[test]
    fn status_classification() {
        assert_eq!(OutcomeClass::from_status(204), OutcomeClass::Success2xx);
        assert_eq!(OutcomeClass::from_status(404), OutcomeClass::ClientError4xx);
        assert_eq!(OutcomeClass::from_status(503), OutcomeClass::ServerError5xx);
        assert_eq!(OutcomeClass::from_status(302), OutcomeClass::ClientError4xx);
        assert_eq!(OutcomeClass::from_status(101), OutcomeClass::ClientError4xx);
    }

    /// Environment whose outcome depends only on the chosen operation.
    struct Scripted {
        n: usize,
        succeed: Vec<bool>,
        budget: usize,
        used: usize,
        episodes: usize,
    }

    impl Environment for Scripted {
        fn num_operations(&self) -> usize {
            self.n
        }
        fn begin_episode(&mut self) {
            self.episodes += 1;
        }
        fn step(&mut self, op: usize) -> Result<OutcomeClass, BudgetExhausted> {
            if self.used >= self.budget {
                return Err(BudgetExhausted);
            }
            self.used += 1;
            Ok(if self.succeed[op] {
                OutcomeClass::Success2xx
            } else {
                OutcomeClass::ClientError4xx
            })
        }
    }

    fn explorer(n: usize, kind: ExplorerKind) -> Explorer {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        Explorer::new(n, PpoConfig::default(), kind, &mut rng).unwrap()
    }

    #[test]
    fn episode_length_is_twenty_per_operation() {
        assert_eq!(episode_length(3), 60);
        let mut env = Scripted {
            n: 3,
            succeed: vec![false; 3],
            budget: 1000,
            used: 0,
            episodes: 0,
        };
        let mut ex = explorer(3, ExplorerKind::Ppo);
        let ep = ex.run_episode(&mut env, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(ep.buffer.len(), 60);
        assert_eq!(ep.end, EpisodeEnd::Completed);
        assert_eq!(env.episodes, 1);
    }

    #[test]
    fn truncates_on_twenty_first_success() {
        let mut env = Scripted {
            n: 2,
            succeed: vec![true, false],
            budget: 1000,
            used: 0,
            episodes: 0,
        };
        // policy head biased so that op 0 is chosen on every step
        let mut params = PolicyParams::new(2, 8, &mut ChaCha8Rng::seed_from_u64(0));
        let head = params.policy.layers.last_mut().unwrap();
        head.weights.iter_mut().for_each(|w| *w = 0.0);
        head.bias = vec![60.0, -60.0];
        let mut ex = Explorer::with_params(params, PpoConfig::default(), ExplorerKind::Ppo).unwrap();
        let ep = ex.run_episode(&mut env, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(ep.buffer.len(), 21);
        assert!(ep.actions.iter().all(|&a| a == 0));
        assert_eq!(ep.end, EpisodeEnd::Truncated);
        assert!(ep.state.truncated);
        assert_eq!(ep.rewards[0], 1000.0);
        assert!(ep.rewards[1..].iter().all(|&r| r == -100.0));
        assert_eq!(ep.final_observation.counters(), &[20, 0]);
    }

    #[test]
    fn budget_cuts_episode() {
        let mut env = Scripted {
            n: 3,
            succeed: vec![false; 3],
            budget: 10,
            used: 0,
            episodes: 0,
        };
        let mut ex = explorer(3, ExplorerKind::Ppo);
        let mut ep = ex.run_episode(&mut env, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(ep.buffer.len(), 10);
        assert_eq!(ep.end, EpisodeEnd::BudgetExhausted);
        assert!(ex.learn(&mut ep).unwrap().is_some());
        assert!(ex.params().is_finite());
    }

    #[test]
    fn single_operation_always_selected() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let params = PolicyParams::new(1, 8, &mut rng);
        for _ in 0..100 {
            assert_eq!(select_operation(&StateObservation::zeros(1), &params, &mut rng), 0);
        }
    }

    #[test]
    fn fresh_policy_selects_uniformly() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let params = PolicyParams::new(3, 64, &mut rng);
        let mut counts = [0usize; 3];
        for _ in 0..10_000 {
            counts[select_operation(&StateObservation::zeros(3), &params, &mut rng)] += 1;
        }
        for c in counts {
            let f = c as f64 / 10_000.0;
            assert!((f - 1.0 / 3.0).abs() <= 0.05, "{counts:?}");
        }
    }

    #[test]
    fn uniform_ablation_does_not_learn() {
        let mut env = Scripted {
            n: 2,
            succeed: vec![true, false],
            budget: 1000,
            used: 0,
            episodes: 0,
        };
        let mut ex = explorer(2, ExplorerKind::Uniform);
        let before = ex.params().clone();
        let mut ep = ex.run_episode(&mut env, &mut ChaCha8Rng::seed_from_u64(1));
        assert!(ex.learn(&mut ep).unwrap().is_none());
        assert_eq!(ex.params(), &before);
    }

    #[test]
    fn same_seed_same_actions() {
        let run = || {
            let mut env = Scripted {
                n: 3,
                succeed: vec![true, false, true],
                budget: 500,
                used: 0,
                episodes: 0,
            };
            let mut ex = explorer(3, ExplorerKind::Ppo);
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            let mut history = Vec::new();
            for _ in 0..4 {
                let mut ep = ex.run_episode(&mut env, &mut rng);
                ex.learn(&mut ep).unwrap();
                history.extend(ep.actions.iter().zip(&ep.rewards).map(|(a, r)| (*a, *r as i64)));
            }
            history
        };
        assert_eq!(run(), run());
    }
}
