use rand::Rng;
use rand_distr::StandardNormal;

use super::types::ACTION_DIM;

/// Ornstein-Uhlenbeck parameters, one entry per action dimension
/// (acceleration, brake, steering).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuParams {
    /// Mean-reversion rate.
    pub theta: [f64; ACTION_DIM],
    /// Long-run mean.
    pub mu: [f64; ACTION_DIM],
    /// Volatility.
    pub sigma: [f64; ACTION_DIM],
    pub dt: f64,
}

impl Default for OuParams {
    fn default() -> Self {
        Self {
            theta: [0.6, 0.6, 1.0],
            mu: [0.5, -0.1, 0.0],
            sigma: [0.10, 0.05, 0.30],
            dt: 1.0,
        }
    }
}

/// Temporally correlated exploration noise:
/// `x <- x + theta (mu - x) dt + sigma sqrt(dt) N(0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OuNoise {
    pub params: OuParams,
    pub state: [f64; ACTION_DIM],
}

impl OuNoise {
    /// Starts at the long-run mean.
    pub fn new(params: OuParams) -> Self {
        Self {
            state: params.mu,
            params,
        }
    }

    pub fn reset(&mut self) {
        self.state = self.params.mu;
    }

    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> [f64; ACTION_DIM] {
        let p = &self.params;
        let sqrt_dt = p.dt.sqrt();
        for i in 0..ACTION_DIM {
            let n: f64 = rng.sample(StandardNormal);
            self.state[i] += p.theta[i] * (p.mu[i] - self.state[i]) * p.dt + p.sigma[i] * sqrt_dt * n;
        }
        self.state
    }
}
