use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

/// Chooses among `options` in proportion to their accumulated rewards.
///
/// With probability `epsilon` the choice is uniform instead, and it is
/// uniform as well while every tally is still zero.
pub fn probability_match<'a, T, R>(options: &'a [(T, u64)], epsilon: f64, rng: &mut R) -> &'a T
where
    R: Rng + ?Sized,
{
    assert!(!options.is_empty(), "probability_match needs at least one option");
    let explore = rng.gen::<f64>() < epsilon;
    let total: u64 = options.iter().map(|(_, r)| r).sum();
    if explore || total == 0 {
        return &options[rng.gen_range(0..options.len())].0;
    }
    let mut ticket = rng.gen_range(0..total);
    for (option, reward) in options {
        if ticket < *reward {
            return option;
        }
        ticket -= reward;
    }
    unreachable!("ticket below total reward")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionKind {
    Presence,
    ArrayLength,
    Source,
}

impl fmt::Display for DecisionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Presence => "presence",
            Self::ArrayLength => "array_length",
            Self::Source => "source",
        })
    }
}

/// Identity of one bandit agent: a normalized parameter name plus the kind
/// of decision it makes. Parameters sharing a normalized name share agents
/// across operations.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AgentKey {
    pub name: String,
    pub kind: DecisionKind,
}

impl AgentKey {
    pub fn new(name: impl Into<String>, kind: DecisionKind) -> Self {
        Self {
            name: name.into(),
            kind,
        }
    }
}

impl fmt::Display for AgentKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.name, self.kind)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decision {
    pub agent: AgentKey,
    pub option: String,
}

/// Cumulative reward tallies per agent and option.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExperienceStore {
    agents: BTreeMap<AgentKey, BTreeMap<String, u64>>,
}

impl ExperienceStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn tally(&self, agent: &AgentKey, option: &str) -> u64 {
        self.agents
            .get(agent)
            .and_then(|t| t.get(option))
            .copied()
            .unwrap_or(0)
    }

    pub fn tallies(&self, agent: &AgentKey) -> Option<&BTreeMap<String, u64>> {
        self.agents.get(agent)
    }

    pub fn reward(&mut self, agent: &AgentKey, option: &str) {
        *self
            .agents
            .entry(agent.clone())
            .or_default()
            .entry(option.to_string())
            .or_default() += 1;
    }

    /// Adds +1 to every traced decision when the request succeeded.
    pub fn reward_decisions(&mut self, trace: &[Decision], success: bool) {
        if !success {
            return;
        }
        for d in trace {
            self.reward(&d.agent, &d.option);
        }
    }

    pub fn agents(&self) -> impl Iterator<Item = (&AgentKey, &BTreeMap<String, u64>)> {
        self.agents.iter()
    }

    /// Serializable view: `"name/kind" → option → tally`.
    pub fn snapshot(&self) -> BTreeMap<String, BTreeMap<String, u64>> {
        self.agents
            .iter()
            .map(|(k, v)| (k.to_string(), v.clone()))
            .collect()
    }
}
