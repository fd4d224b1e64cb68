use super::car::CarState;
use super::geometry::{ray_segment, Vec2};
use super::track::TrackDefinition;
use crate::ddpg::{NUM_RANGE_FINDERS, RANGE_FINDER_MAX};

/// Ray directions relative to the heading: -90 deg to +90 deg in 10 deg
/// steps, so index 0 points right and index 18 points left.
pub fn ray_offsets() -> [f64; NUM_RANGE_FINDERS] {
    std::array::from_fn(|i| (-90.0 + 10.0 * i as f64).to_radians())
}

/// Distance along each ray to the nearest track edge, capped at 200 m.
/// All readings are zero while the car is off the track.
pub fn range_finders(state: &CarState, track: &TrackDefinition) -> [f64; NUM_RANGE_FINDERS] {
    if state.lateral.abs() > track.half_width() {
        return [0.0; NUM_RANGE_FINDERS];
    }
    let offsets = ray_offsets();
    std::array::from_fn(|i| cast(state.position, state.heading + offsets[i], track))
}

/// Single ray cast against both boundaries.
pub fn cast(origin: Vec2, direction: f64, track: &TrackDefinition) -> f64 {
    let dir = Vec2::from_angle(direction);
    track
        .boundary_segments()
        .filter_map(|(a, b)| ray_segment(origin, dir, a, b))
        .fold(RANGE_FINDER_MAX, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::track::{builtin, stadium};

    #[test]
    fn centered_car_reads_half_width_sideways_and_cap_ahead() {
        // 10 m wide corridor.
        let t = stadium("corridor", 1000.0, 40.0, 5.0).unwrap();
        let s = CarState::reset(&t);
        let r = range_finders(&s, &t);
        assert!((r[0] - 5.0).abs() < 1e-9);
        assert!((r[18] - 5.0).abs() < 1e-9);
        assert_eq!(r[9], RANGE_FINDER_MAX);
    }

    #[test]
    fn builtin_straight_reads_six_meters_sideways() {
        let t = builtin("straight").unwrap();
        let r = range_finders(&CarState::reset(&t), &t);
        assert!((r[0] - 6.0).abs() < 1e-9 && (r[18] - 6.0).abs() < 1e-9, "{r:?}");
    }

    #[test]
    fn off_track_reads_zero() {
        let t = builtin("oval").unwrap();
        let s = CarState::placed(&t, Vec2::new(100.0, -90.0), 0.0);
        assert_eq!(range_finders(&s, &t), [0.0; NUM_RANGE_FINDERS]);
    }
}
