//! Black-box REST API testing driven by curiosity-based reinforcement
//! learning, bandit-guided input generation and mutation-based
//! intensification.

pub mod cli;
pub mod explorer;
pub mod input;
pub mod intensifier;
pub mod interaction;
pub mod metrics;
pub mod oas;
pub mod rl;
pub mod session;
pub mod sim;
