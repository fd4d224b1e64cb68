//! Deterministic 2D closed-track driving environment.
//!
//! Every function here is pure: a [`CarState`] plus an action and a track
//! fully determine the successor state, the observation and the reward.

mod car;
pub mod geometry;
mod metrics;
mod reward;
mod sensors;
mod track;

pub use car::{
    observe, step, CarState, Dynamics, SimConfig, StepResult, TerminationReason,
    DEFAULT_MAX_STEPS, MS_TO_KMH,
};
pub use geometry::Vec2;
pub use metrics::EpisodeMetrics;
pub use reward::{compute_reward, RewardWeights};
pub use sensors::{cast, range_finders, ray_offsets};
pub use track::{builtin, stadium, TrackDefinition, TrackFrame, BUILTIN_TRACKS};
