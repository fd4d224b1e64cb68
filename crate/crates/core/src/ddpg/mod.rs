//! The DDPG learner.
//!
//! The critic is regressed onto one-step TD targets computed from the target
//! networks, the actor follows the deterministic policy gradient obtained by
//! chaining dQ/da through the actor, and both target networks trail the
//! online ones by soft updates. Exploration is off-policy: the behaviour
//! policy adds Ornstein-Uhlenbeck noise to the greedy action.

mod agent;
mod critic;
mod noise;
mod replay;
mod types;

pub use agent::{squash, AgentConfig, DdpgAgent, UpdateStats};
pub use critic::{ActionValue, Critic, CriticCache, CriticGradients};
pub use noise::{OuNoise, OuParams};
pub use replay::{ReplayBuffer, DEFAULT_CAPACITY};
pub use types::{
    ActionVector, Experience, ObservationVector, ACTION_DIM, NUM_RANGE_FINDERS, OBS_DIM,
    RANGE_FINDER_MAX,
};
