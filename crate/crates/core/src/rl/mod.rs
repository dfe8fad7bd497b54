//! Proximal policy optimization for a single discrete action head over a
//! flat real-valued observation, with small tanh MLPs for policy and value.

mod buffer;
mod checkpoint;
mod network;
mod ppo;

pub use buffer::{RolloutBuffer, Step};
pub use checkpoint::{Checkpoint, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use network::{policy_forward, sample_action, Dense, Mlp, PolicyParams};
pub use ppo::{
    clipped_surrogate, loss_and_gradient, Adam, LossEval, LossStats, PpoConfig, PpoTrainer, Sample,
};

#[derive(Debug, thiserror::Error)]
pub enum RlError {
    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("action mask allows no action")]
    EmptyMask,
    #[error("non-finite loss or gradient; update aborted")]
    NonFiniteLoss,
    #[error("rollout buffer has no advantages; run compute_gae first")]
    MissingAdvantages,
    #[error("invalid PPO configuration: {0}")]
    InvalidConfig(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}
