use super::car::{CarState, StepResult};
use crate::error::{Error, Result};

/// Per-episode summary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeMetrics {
    /// Mean longitudinal speed (km/h); lateral speed is not counted.
    pub mean_speed_kmh: f64,
    /// Mean per-step reward.
    pub mean_step_gain: f64,
    /// Net distance along the centerline (m).
    pub total_distance_m: f64,
    pub total_reward: f64,
    /// Population variance of the signed distance from the centerline (m^2).
    pub var_dist_center_m2: f64,
    pub episode_steps: u64,
}

impl EpisodeMetrics {
    pub fn from_history(
        history: &[StepResult],
        final_state: &CarState,
        half_width: f64,
    ) -> Result<Self> {
        if history.is_empty() {
            return Err(Error::usage("episode metrics need at least one step"));
        }
        let n = history.len() as f64;
        let total_reward: f64 = history.iter().map(|r| r.reward).sum();
        let mean_speed = history.iter().map(|r| r.observation.speed_x()).sum::<f64>() / n;
        let offsets: Vec<f64> = history
            .iter()
            .map(|r| r.observation.track_pos() * half_width)
            .collect();
        let mean_offset = offsets.iter().sum::<f64>() / n;
        let var = offsets.iter().map(|d| (d - mean_offset).powi(2)).sum::<f64>() / n;
        Ok(Self {
            mean_speed_kmh: mean_speed,
            mean_step_gain: total_reward / n,
            total_distance_m: final_state.arc_progress,
            total_reward,
            var_dist_center_m2: var,
            episode_steps: history.len() as u64,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ddpg::{ObservationVector, OBS_DIM};
    use crate::sim::car::TerminationReason;
    use crate::sim::track::builtin;

    fn result(reward: f64, speed: f64, track_pos: f64) -> StepResult {
        let mut v = [0.0; OBS_DIM];
        v[ObservationVector::SPEED_X] = speed;
        v[ObservationVector::TRACK_POS] = track_pos;
        StepResult {
            observation: ObservationVector(v),
            reward,
            terminal: false,
            termination_reason: TerminationReason::Running,
        }
    }

    #[test]
    fn stationary_episode() {
        let t = builtin("oval").unwrap();
        let s = CarState::reset(&t);
        let h = vec![result(0.0, 0.0, 0.0); 10];
        let m = EpisodeMetrics::from_history(&h, &s, 6.0).unwrap();
        assert_eq!(m.mean_speed_kmh, 0.0);
        assert_eq!(m.total_distance_m, 0.0);
        assert_eq!(m.episode_steps, 10);
    }

    #[test]
    fn constant_offset_has_zero_variance() {
        let t = builtin("oval").unwrap();
        let h = vec![result(1.0, 10.0, 0.37); 7];
        let m = EpisodeMetrics::from_history(&h, &CarState::reset(&t), 6.0).unwrap();
        assert!(m.var_dist_center_m2.abs() < 1e-24);
    }

    #[test]
    fn reward_aggregates() {
        let t = builtin("oval").unwrap();
        let h = vec![result(1.0, 0.0, 0.0), result(2.0, 0.0, 0.0), result(3.0, 0.0, 0.0)];
        let m = EpisodeMetrics::from_history(&h, &CarState::reset(&t), 6.0).unwrap();
        assert_eq!(m.mean_step_gain, 2.0);
        assert_eq!(m.total_reward, 6.0);
    }

    #[test]
    fn variance_is_in_meters() {
        let t = builtin("oval").unwrap();
        let h = vec![result(0.0, 0.0, 0.5), result(0.0, 0.0, -0.5)];
        let m = EpisodeMetrics::from_history(&h, &CarState::reset(&t), 6.0).unwrap();
        assert!((m.var_dist_center_m2 - 9.0).abs() < 1e-12);
    }

    #[test]
    fn empty_episode_is_usage_error() {
        let t = builtin("oval").unwrap();
        assert!(matches!(
            EpisodeMetrics::from_history(&[], &CarState::reset(&t), 6.0),
            Err(Error::Usage(_))
        ));
    }
}
