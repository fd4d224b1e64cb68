use std::f64::consts::FRAC_PI_2;

use super::geometry::{wrap_angle, Vec2};
use super::reward::{compute_reward, RewardWeights};
use super::sensors::range_finders;
use super::track::{TrackDefinition, TrackFrame};
use crate::ddpg::{ActionVector, ObservationVector};

/// m/s to km/h.
pub const MS_TO_KMH: f64 = 3.6;

/// Default episode cap in steps.
pub const DEFAULT_MAX_STEPS: u64 = 60_000;

/// Kinematic bicycle with a longitudinal force balance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dynamics {
    /// m
    pub wheelbase: f64,
    /// Front-wheel angle at full steering input (rad).
    pub max_steer: f64,
    /// Acceleration at full throttle (m/s^2).
    pub accel_gain: f64,
    /// Deceleration at full brake (m/s^2).
    pub brake_gain: f64,
    /// Linear drag coefficient (1/s).
    pub drag: f64,
    /// m/s
    pub v_max: f64,
    /// m; only used for the wheel-spin channels.
    pub wheel_radius: f64,
}

impl Default for Dynamics {
    fn default() -> Self {
        Self {
            wheelbase: 2.5,
            max_steer: 21f64.to_radians(),
            accel_gain: 8.0,
            brake_gain: 12.0,
            drag: 0.08,
            v_max: 85.0,
            wheel_radius: 0.3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub dynamics: Dynamics,
    pub reward: RewardWeights,
    /// Control period (s).
    pub dt: f64,
    pub max_steps: u64,
    /// Consecutive steps with |angle| > pi/2 before the episode ends.
    pub wrong_way_patience: u32,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dynamics: Dynamics::default(),
            reward: RewardWeights::default(),
            dt: 0.05,
            max_steps: DEFAULT_MAX_STEPS,
            wrong_way_patience: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarState {
    /// m
    pub position: Vec2,
    /// rad, in [-pi, pi]
    pub heading: f64,
    /// m/s, in [0, v_max]
    pub speed_long: f64,
    /// Rate of change of the signed offset from the centerline (m/s).
    pub speed_lat: f64,
    /// Net distance driven along the centerline since reset (m).
    pub arc_progress: f64,
    pub steps: u64,
    /// Arc coordinate of the closest centerline point.
    pub track_arc: f64,
    /// Signed offset from the centerline (m), positive to the left.
    pub lateral: f64,
    pub wrong_way_steps: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TerminationReason {
    Running,
    OutOfTrack,
    WrongWay,
    StepCap,
}

impl TerminationReason {
    pub fn as_str(self) -> &'static str {
        match self {
            TerminationReason::Running => "running",
            TerminationReason::OutOfTrack => "out_of_track",
            TerminationReason::WrongWay => "wrong_way",
            TerminationReason::StepCap => "step_cap",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepResult {
    pub observation: ObservationVector,
    pub reward: f64,
    pub terminal: bool,
    pub termination_reason: TerminationReason,
}

impl CarState {
    /// At rest on the first centerline point, facing along the track.
    pub fn reset(track: &TrackDefinition) -> Self {
        let (position, heading) = track.point_at(0.0);
        Self::placed(track, position, heading)
    }

    /// At rest at an arbitrary pose.
    pub fn placed(track: &TrackDefinition, position: Vec2, heading: f64) -> Self {
        let frame = track.project(position);
        Self {
            position,
            heading: wrap_angle(heading),
            speed_long: 0.0,
            speed_lat: 0.0,
            arc_progress: 0.0,
            steps: 0,
            track_arc: frame.arc,
            lateral: frame.lateral,
            wrong_way_steps: 0,
        }
    }
}

fn observation(
    state: &CarState,
    frame: &TrackFrame,
    track: &TrackDefinition,
    dynamics: &Dynamics,
) -> ObservationVector {
    let angle = wrap_angle(state.heading - frame.tangent_heading);
    let spin = state.speed_long / dynamics.wheel_radius;
    ObservationVector::new(
        angle,
        range_finders(state, track),
        frame.lateral / track.half_width(),
        [
            state.speed_long * MS_TO_KMH,
            state.speed_lat * MS_TO_KMH,
            0.0,
        ],
        [spin; 4],
        state.speed_long / dynamics.v_max,
    )
}

/// Sensor reading for the current state.
pub fn observe(state: &CarState, track: &TrackDefinition, config: &SimConfig) -> ObservationVector {
    observation(state, &track.project(state.position), track, &config.dynamics)
}

/// Advances the car by one control period. Pure: the returned state and
/// result depend only on the arguments.
pub fn step(
    state: &CarState,
    action: &ActionVector,
    track: &TrackDefinition,
    config: &SimConfig,
) -> (CarState, StepResult) {
    let d = &config.dynamics;
    let dt = config.dt;
    let a = action.clamped();

    let yaw_rate = state.speed_long / d.wheelbase * (d.max_steer * a.steering).tan();
    let heading = wrap_angle(state.heading + yaw_rate * dt);
    let accel = d.accel_gain * a.acceleration - d.brake_gain * a.brake - d.drag * state.speed_long;
    let speed_long = (state.speed_long + accel * dt).clamp(0.0, d.v_max);
    let position = state.position + Vec2::from_angle(heading) * (speed_long * dt);

    let frame = track.project(position);
    let angle = wrap_angle(heading - frame.tangent_heading);
    let next = CarState {
        position,
        heading,
        speed_long,
        speed_lat: (frame.lateral - state.lateral) / dt,
        arc_progress: state.arc_progress + track.arc_delta(state.track_arc, frame.arc),
        steps: state.steps + 1,
        track_arc: frame.arc,
        lateral: frame.lateral,
        wrong_way_steps: if angle.abs() > FRAC_PI_2 {
            state.wrong_way_steps + 1
        } else {
            0
        },
    };

    let observation = observation(&next, &frame, track, d);
    let reason = if observation.track_pos().abs() > 1.0 {
        TerminationReason::OutOfTrack
    } else if next.wrong_way_steps >= config.wrong_way_patience {
        TerminationReason::WrongWay
    } else if next.steps >= config.max_steps {
        TerminationReason::StepCap
    } else {
        TerminationReason::Running
    };
    let result = StepResult {
        reward: compute_reward(&observation, &config.reward),
        observation,
        terminal: reason != TerminationReason::Running,
        termination_reason: reason,
    };
    (next, result)
}
