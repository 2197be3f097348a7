//! DQN and PN-CDQN agents plus fixed-cycle baselines.

mod baseline;
mod dqn;
mod policy;
mod replay;

pub use baseline::{BaselineCycle, BaselineVersion};
pub use dqn::{train_loop, Agent, TrainOutput, TrainingLogRow};
pub use policy::{compute_targets, epsilon_at, masked_argmax, select_action, AgentMode};
pub use replay::{ReplayBuffer, Transition};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::neural::NeuralError;
use crate::wrapper::WrapperError;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("no valid action in the current marking")]
    EmptyMask,
    #[error("invalid agent config: {0}")]
    Config(String),
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error(transparent)]
    Wrapper(#[from] WrapperError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentConfig {
    pub mode: AgentMode,
    pub gamma: f64,
    pub lr: f64,
    pub epsilon_start: f64,
    pub epsilon_final: f64,
    pub epsilon_decay_steps: u64,
    /// Steps at the start that act uniformly at random.
    pub random_steps: u64,
    pub learning_starts: u64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    /// Soft target update rate applied on every training step.
    pub tau: f64,
    pub train_every: u64,
    pub max_steps: u64,
    pub hidden: Vec<usize>,
    /// Multiplier on rewards before they enter the replay buffer.
    pub reward_scale: f64,
    /// Bootstrap through queue-overflow terminations instead of cutting the
    /// target there. The episode still resets.
    pub bootstrap_on_overflow: bool,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig::desk()
    }
}

impl AgentConfig {
    /// Scaled-down schedule that trains in minutes.
    pub fn desk() -> Self {
        AgentConfig {
            mode: AgentMode::PnCdqn,
            gamma: 0.95,
            lr: 0.001,
            epsilon_start: 1.0,
            epsilon_final: 0.04,
            epsilon_decay_steps: 20_000,
            random_steps: 5_000,
            learning_starts: 5_000,
            batch_size: 64,
            buffer_capacity: 100_000,
            tau: 0.005,
            train_every: 2,
            max_steps: 300_000,
            hidden: vec![64, 64],
            reward_scale: 0.05,
            bootstrap_on_overflow: true,
        }
    }

    /// Full-length schedule.
    pub fn full() -> Self {
        AgentConfig {
            epsilon_decay_steps: 400_000,
            random_steps: 200_000,
            learning_starts: 200_000,
            max_steps: 15_000_000,
            ..AgentConfig::desk()
        }
    }

    pub fn validate(&self) -> Result<(), AgentError> {
        let bad = |m: &str| Err(AgentError::Config(m.to_string()));
        if !(0.0..1.0).contains(&self.gamma) {
            return bad("gamma must lie in [0, 1)");
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return bad("lr must be positive");
        }
        if !(0.0..=1.0).contains(&self.epsilon_start) || !(0.0..=1.0).contains(&self.epsilon_final) {
            return bad("epsilon values must lie in [0, 1]");
        }
        if self.batch_size == 0 || self.buffer_capacity == 0 || self.train_every == 0 {
            return bad("batch_size, buffer_capacity and train_every must be positive");
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return bad("tau must lie in (0, 1]");
        }
        if self.hidden.contains(&0) {
            return bad("hidden layer sizes must be positive");
        }
        if !(self.reward_scale.is_finite() && self.reward_scale > 0.0) {
            return bad("reward_scale must be positive");
        }
        Ok(())
    }
}
