use crate::ddpg::ObservationVector;

/// Weights of the lateral-speed (`alpha`), speed-scaled offset (`beta`) and
/// plain offset (`gamma_w`) penalties.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma_w: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 1.0,
            gamma_w: 0.1,
        }
    }
}

/// `R = Vx cos(angle) - alpha Vx |sin(angle)| - gamma_w |trackPos| - beta Vx |trackPos|`
/// with `Vx` the longitudinal speed in km/h.
pub fn compute_reward(obs: &ObservationVector, w: &RewardWeights) -> f64 {
    let vx = obs.speed_x();
    let theta = obs.angle();
    let pos = obs.track_pos().abs();
    vx * theta.cos() - w.alpha * vx * theta.sin().abs() - w.gamma_w * pos - w.beta * vx * pos
}
