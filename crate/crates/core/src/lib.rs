//! Petri-net constrained reinforcement learning.
//!
//! A place/transition net engine, a wrapper that turns enabled transitions
//! into valid action sets, DQN and PN-CDQN agents, a four-way traffic
//! junction simulator, and the harness that trains, evaluates and sweeps.

pub mod agents;
pub mod harness;
pub mod junction;
pub mod metrics;
pub mod neural;
pub mod petri;
pub mod wrapper;

pub use agents::{Agent, AgentConfig, AgentMode, BaselineCycle, BaselineVersion};
pub use junction::{Junction, JunctionAction, JunctionConfig, Observation, StepInfo};
pub use metrics::{EpisodeRecord, EpisodeStats, EvalSummary, RewardWeights};
pub use neural::Mlp;
pub use petri::{Marking, PetriNet};
pub use wrapper::{CombinedState, ConstraintWrapper, WrapperMode};

/// Mixes a base seed with a stream index (splitmix64 finaliser), giving
/// independent reproducible seeds for episodes, sweep cells and rng streams.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
