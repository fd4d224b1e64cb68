use std::f64::consts::PI;

use crate::error::{Error, Result};

pub const OBS_DIM: usize = 29;
pub const ACTION_DIM: usize = 3;
pub const NUM_RANGE_FINDERS: usize = 19;
/// Range-finder readings are capped at this distance (m).
pub const RANGE_FINDER_MAX: f64 = 200.0;

/// The 29-channel sensor reading fed to the actor.
///
/// Layout: `angle`, `track[19]`, `trackPos`, `speedX`, `speedY`, `speedZ`,
/// `wheelSpin[4]`, `rpm`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservationVector(pub [f64; OBS_DIM]);

impl ObservationVector {
    pub const ANGLE: usize = 0;
    pub const TRACK: usize = 1;
    pub const TRACK_POS: usize = 20;
    pub const SPEED_X: usize = 21;
    pub const SPEED_Y: usize = 22;
    pub const SPEED_Z: usize = 23;
    pub const WHEEL_SPIN: usize = 24;
    pub const RPM: usize = 28;

    #[allow(clippy::too_many_arguments)]
    pub fn new(
        angle: f64,
        track: [f64; NUM_RANGE_FINDERS],
        track_pos: f64,
        speed: [f64; 3],
        wheel_spin: [f64; 4],
        rpm: f64,
    ) -> Self {
        let mut v = [0.0; OBS_DIM];
        v[Self::ANGLE] = angle;
        v[Self::TRACK..Self::TRACK + NUM_RANGE_FINDERS].copy_from_slice(&track);
        v[Self::TRACK_POS] = track_pos;
        v[Self::SPEED_X..Self::SPEED_X + 3].copy_from_slice(&speed);
        v[Self::WHEEL_SPIN..Self::WHEEL_SPIN + 4].copy_from_slice(&wheel_spin);
        v[Self::RPM] = rpm;
        Self(v)
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        let arr: [f64; OBS_DIM] = values.try_into().map_err(|_| {
            Error::config(format!(
                "observation needs {OBS_DIM} values, got {}",
                values.len()
            ))
        })?;
        Ok(Self(arr))
    }

    pub fn angle(&self) -> f64 {
        self.0[Self::ANGLE]
    }

    pub fn track(&self) -> &[f64] {
        &self.0[Self::TRACK..Self::TRACK + NUM_RANGE_FINDERS]
    }

    pub fn track_pos(&self) -> f64 {
        self.0[Self::TRACK_POS]
    }

    /// Longitudinal speed, km/h.
    pub fn speed_x(&self) -> f64 {
        self.0[Self::SPEED_X]
    }

    pub fn speed_y(&self) -> f64 {
        self.0[Self::SPEED_Y]
    }

    pub fn speed_z(&self) -> f64 {
        self.0[Self::SPEED_Z]
    }

    pub fn wheel_spin(&self) -> &[f64] {
        &self.0[Self::WHEEL_SPIN..Self::WHEEL_SPIN + 4]
    }

    pub fn rpm(&self) -> f64 {
        self.0[Self::RPM]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn is_valid(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
            && (-PI..=PI).contains(&self.angle())
            && self
                .track()
                .iter()
                .all(|d| (0.0..=RANGE_FINDER_MAX).contains(d))
    }

    /// Fixed rescaling applied before the networks so every channel is
    /// roughly unit-sized: angle by pi, distances by the range cap, speeds
    /// by 300 km/h and wheel spin by 300 rad/s.
    pub fn network_input(&self) -> [f64; OBS_DIM] {
        let mut x = self.0;
        x[Self::ANGLE] /= PI;
        for d in &mut x[Self::TRACK..Self::TRACK + NUM_RANGE_FINDERS] {
            *d /= RANGE_FINDER_MAX;
        }
        for s in &mut x[Self::SPEED_X..Self::SPEED_X + 3] {
            *s /= 300.0;
        }
        for w in &mut x[Self::WHEEL_SPIN..Self::WHEEL_SPIN + 4] {
            *w /= 300.0;
        }
        x
    }
}

/// Accelerator and brake in [0, 1]; steering in [-1, 1] with +1 full left.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ActionVector {
    pub acceleration: f64,
    pub brake: f64,
    pub steering: f64,
}

impl ActionVector {
    pub fn new(acceleration: f64, brake: f64, steering: f64) -> Self {
        Self {
            acceleration,
            brake,
            steering,
        }
    }

    pub fn from_array(a: [f64; ACTION_DIM]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [f64; ACTION_DIM] {
        [self.acceleration, self.brake, self.steering]
    }

    /// Projects every component onto its range; NaN maps to 0.
    pub fn clamped(self) -> Self {
        fn clamp(v: f64, lo: f64, hi: f64) -> f64 {
            if v.is_nan() {
                0.0
            } else {
                v.clamp(lo, hi)
            }
        }
        Self {
            acceleration: clamp(self.acceleration, 0.0, 1.0),
            brake: clamp(self.brake, 0.0, 1.0),
            steering: clamp(self.steering, -1.0, 1.0),
        }
    }

    pub fn is_valid(&self) -> bool {
        (0.0..=1.0).contains(&self.acceleration)
            && (0.0..=1.0).contains(&self.brake)
            && (-1.0..=1.0).contains(&self.steering)
    }
}

/// One `(s, a, r, s', done)` transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Experience {
    pub state: ObservationVector,
    pub action: ActionVector,
    pub reward: f64,
    pub next_state: ObservationVector,
    pub terminal: bool,
}

impl Experience {
    pub fn new(
        state: ObservationVector,
        action: ActionVector,
        reward: f64,
        next_state: ObservationVector,
        terminal: bool,
    ) -> Result<Self> {
        if !reward.is_finite() {
            return Err(Error::usage(format!("reward {reward} is not finite")));
        }
        Ok(Self {
            state,
            action,
            reward,
            next_state,
            terminal,
        })
    }
}
