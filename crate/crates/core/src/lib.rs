//! Deep deterministic policy gradient (DDPG) trained inside a deterministic
//! 2D closed-track driving simulator.
//!
//! - [`nn`]: dense feedforward networks with exact reverse-mode gradients and Adam.
//! - [`ddpg`]: actor, composite critic, target networks, replay buffer and
//!   Ornstein-Uhlenbeck exploration noise.
//! - [`sim`]: track geometry, kinematic bicycle dynamics, range finders,
//!   reward and per-episode metrics.
//! - [`harness`]: configuration, the training/evaluation loops, checkpoints
//!   and metrics export.

pub mod ddpg;
pub mod error;
pub mod harness;
pub mod nn;
pub mod sim;

pub use error::{Error, Result};
