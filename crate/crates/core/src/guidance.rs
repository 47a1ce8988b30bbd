//! Straight-line line-of-sight path following.
//!
//! The desired course is the path azimuth turned back toward the path by
//! `atan(e / lookahead)`, where `e` is the signed cross-track error (positive
//! to the left of the path). Headings are compass angles (clockwise), so a
//! vessel left of the path is steered clockwise.
//! A PD law on the heading error drives both nozzles together and a
//! feedforward-plus-proportional law holds the cruise speed.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{EnuVector, Heading};
use crate::scalar::{clamp, lit, Real};
use crate::vessel::{HullParams, JetCommand, VesselState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum GuidanceError {
    #[error("degenerate path: at least two waypoints required")]
    DegeneratePath,
    #[error("degenerate segment: start and end coincide")]
    DegenerateSegment,
    #[error("segment index {0} out of range")]
    IndexOutOfRange(usize),
    #[error("invalid guidance parameter `{0}`")]
    InvalidParams(&'static str),
}

/// Largest course correction the law will command, degrees. Keeps the
/// correction strictly inside the `atan` range after rounding.
const MAX_CORRECTION_DEG: f64 = 89.999;

/// Horizontal path leg between two waypoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSegment<S> {
    start: EnuVector<S>,
    end: EnuVector<S>,
}

impl<S: Real> PathSegment<S> {
    pub fn new(start: EnuVector<S>, end: EnuVector<S>) -> Result<Self, GuidanceError> {
        let (start, end) = (start.flatten(), end.flatten());
        if (end - start).horizontal_norm() == S::zero() {
            return Err(GuidanceError::DegenerateSegment);
        }
        Ok(Self { start, end })
    }

    pub fn start(&self) -> EnuVector<S> {
        self.start
    }

    pub fn end(&self) -> EnuVector<S> {
        self.end
    }

    pub fn azimuth(&self) -> Heading<S> {
        (self.end - self.start).azimuth().expect("non-degenerate segment")
    }

    pub fn length(&self) -> S {
        (self.end - self.start).horizontal_norm()
    }
}

/// Tuning of the LOS law and the heading/speed loops.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "S: Real + Deserialize<'de>"))]
#[serde(deny_unknown_fields)]
pub struct LosParams<S> {
    /// Lookahead distance, m.
    pub lookahead: S,
    pub acceptance_radius: S,
    /// m/s
    pub cruise_speed: S,
    /// Nozzle degrees per degree of heading error.
    pub heading_kp: S,
    /// Nozzle degrees per deg/s of yaw rate.
    pub heading_kd: S,
    /// Newtons per jet per m/s of speed error.
    pub speed_kp: S,
}

impl<S: Real> LosParams<S> {
    /// Defaults for a hull: lookahead and acceptance radius of four hull lengths.
    pub fn for_hull(hull: &HullParams<S>) -> Self {
        let lookahead = lit::<S>(4.0) * hull.length;
        Self {
            lookahead,
            acceptance_radius: lookahead,
            cruise_speed: lit(3.0),
            heading_kp: lit(1.5),
            heading_kd: lit(1.0),
            speed_kp: lit(2_000.0),
        }
    }

    pub fn validate(&self) -> Result<(), GuidanceError> {
        let checks = [
            (self.lookahead, "lookahead"),
            (self.acceptance_radius, "acceptance_radius"),
            (self.cruise_speed, "cruise_speed"),
        ];
        for (v, name) in checks {
            if !(v.is_finite() && v > S::zero()) {
                return Err(GuidanceError::InvalidParams(name));
            }
        }
        for (v, name) in [(self.heading_kp, "heading_kp"), (self.heading_kd, "heading_kd"), (self.speed_kp, "speed_kp")] {
            if !(v.is_finite() && v >= S::zero()) {
                return Err(GuidanceError::InvalidParams(name));
            }
        }
        Ok(())
    }
}

/// Progress along a waypoint list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GuidanceState {
    pub active_segment_index: usize,
    pub finished: bool,
}

/// Signed distance from `pos` to the line through `seg`, positive on the left.
pub fn cross_track_error<S: Real>(seg: &PathSegment<S>, pos: &EnuVector<S>) -> S {
    let d = seg.end - seg.start;
    let w = *pos - seg.start;
    (d.east * w.north - d.north * w.east) / d.horizontal_norm()
}

/// Clockwise course correction in degrees for a cross-track error and
/// lookahead, strictly inside `(-90, 90)`. Following the corrected course
/// always reduces the magnitude of the cross-track error.
pub fn course_correction<S: Real>(cross_track: S, lookahead: S) -> S {
    let limit = lit::<S>(MAX_CORRECTION_DEG);
    clamp((cross_track / lookahead).atan().to_degrees(), -limit, limit)
}

pub fn los_desired_course<S: Real>(seg: &PathSegment<S>, pos: &EnuVector<S>, p: &LosParams<S>) -> Heading<S> {
    let e = cross_track_error(seg, pos);
    Heading::new(seg.azimuth().degrees() + course_correction(e, p.lookahead))
}

/// PD heading law plus speed hold, saturated into the actuator envelope.
///
/// Both nozzles receive the same deflection; positive deflection turns the
/// hull clockwise.
pub fn heading_controller<S: Real>(
    state: &VesselState<S>,
    desired_course: Heading<S>,
    p: &LosParams<S>,
    hull: &HullParams<S>,
) -> JetCommand<S> {
    let heading_error = desired_course.signed_difference(state.heading);
    let nozzle = clamp(
        p.heading_kp * heading_error - p.heading_kd * state.yaw_rate,
        -hull.nozzle_max,
        hull.nozzle_max,
    );
    let feedforward = hull.damping_surge * p.cruise_speed / lit(2.0);
    let thrust = clamp(
        feedforward + p.speed_kp * (p.cruise_speed - state.surge_velocity),
        S::zero(),
        hull.max_thrust,
    );
    JetCommand::symmetric(thrust, nozzle).clamped(hull)
}

/// Advances to the next segment once `pos` is inside the acceptance radius of
/// the active segment's end. The index never decreases.
pub fn waypoint_switch<S: Real>(
    gstate: GuidanceState,
    pos: &EnuVector<S>,
    waypoints: &[EnuVector<S>],
    p: &LosParams<S>,
) -> Result<GuidanceState, GuidanceError> {
    if waypoints.len() < 2 {
        return Err(GuidanceError::DegeneratePath);
    }
    let last_segment = waypoints.len() - 2;
    if gstate.active_segment_index > last_segment {
        return Err(GuidanceError::IndexOutOfRange(gstate.active_segment_index));
    }
    if gstate.finished {
        return Ok(gstate);
    }
    let end = waypoints[gstate.active_segment_index + 1];
    if (end - *pos).horizontal_norm() > p.acceptance_radius {
        return Ok(gstate);
    }
    Ok(if gstate.active_segment_index == last_segment {
        GuidanceState { finished: true, ..gstate }
    } else {
        GuidanceState { active_segment_index: gstate.active_segment_index + 1, finished: false }
    })
}

/// Output of one guidance update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuidanceOutput<S> {
    pub command: JetCommand<S>,
    pub desired_course: Heading<S>,
    pub cross_track_error: S,
    pub state: GuidanceState,
}

/// Waypoint list plus the LOS law and controller.
#[derive(Debug, Clone, PartialEq)]
pub struct LosGuidance<S> {
    waypoints: Vec<EnuVector<S>>,
    params: LosParams<S>,
    state: GuidanceState,
}

impl<S: Real> LosGuidance<S> {
    pub fn new(waypoints: Vec<EnuVector<S>>, params: LosParams<S>) -> Result<Self, GuidanceError> {
        if waypoints.len() < 2 {
            return Err(GuidanceError::DegeneratePath);
        }
        params.validate()?;
        for pair in waypoints.windows(2) {
            PathSegment::new(pair[0], pair[1])?;
        }
        let waypoints = waypoints.into_iter().map(EnuVector::flatten).collect();
        Ok(Self { waypoints, params, state: GuidanceState::default() })
    }

    pub fn state(&self) -> GuidanceState {
        self.state
    }

    pub fn params(&self) -> &LosParams<S> {
        &self.params
    }

    pub fn active_segment(&self) -> PathSegment<S> {
        let i = self.state.active_segment_index;
        PathSegment::new(self.waypoints[i], self.waypoints[i + 1]).expect("validated at construction")
    }

    /// Switches waypoints, then computes the jet command for `measured`. Once
    /// the final waypoint is reached the jets idle but the course keeps
    /// tracking the last leg.
    pub fn update(&mut self, measured: &VesselState<S>, hull: &HullParams<S>) -> GuidanceOutput<S> {
        self.state = waypoint_switch(self.state, &measured.position, &self.waypoints, &self.params)
            .expect("validated at construction");
        let seg = self.active_segment();
        let desired_course = los_desired_course(&seg, &measured.position, &self.params);
        let mut command = heading_controller(measured, desired_course, &self.params, hull);
        if self.state.finished {
            command = JetCommand::idle();
        }
        GuidanceOutput {
            command,
            desired_course,
            cross_track_error: cross_track_error(&seg, &measured.position),
            state: self.state,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::wrap_signed;
    use crate::vessel::{step, Disturbance};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn v(e: f64, n: f64) -> EnuVector<f64> {
        EnuVector::horizontal(e, n)
    }

    fn params() -> LosParams<f64> {
        LosParams::for_hull(&HullParams::default())
    }

    #[test]
    fn cross_track_examples() {
        let seg = PathSegment::new(v(0.0, 0.0), v(100.0, 0.0)).unwrap();
        assert_eq!(cross_track_error(&seg, &v(30.0, 0.0)), 0.0);
        assert_eq!(cross_track_error(&seg, &v(50.0, 10.0)), 10.0);
        let diag = PathSegment::new(v(0.0, 0.0), v(100.0, 100.0)).unwrap();
        // point-line distance: |100·0 - 100·100| / sqrt(100² + 100²)
        let oracle = -(100.0 * 100.0) / (2.0f64 * 100.0 * 100.0).sqrt();
        assert_abs_diff_eq!(oracle, -70.71, epsilon = 0.01);
        assert_abs_diff_eq!(cross_track_error(&diag, &v(100.0, 0.0)), oracle, epsilon = 1e-9);
    }

    #[test]
    fn degenerate_segment_rejected() {
        assert_eq!(PathSegment::new(v(1.0, 1.0), v(1.0, 1.0)), Err(GuidanceError::DegenerateSegment));
    }

    #[test]
    fn desired_course_examples() {
        let p = params();
        let seg = PathSegment::new(v(0.0, 0.0), v(0.0, 100.0)).unwrap();
        assert_eq!(los_desired_course(&seg, &v(0.0, 10.0), &p).degrees(), 0.0);
        // left of a northbound path is west; steer north-east to rejoin
        let left = los_desired_course(&seg, &v(-p.lookahead, 10.0), &p).degrees();
        assert_abs_diff_eq!(left, 45.0, epsilon = 1e-9);
        let right = los_desired_course(&seg, &v(p.lookahead, 10.0), &p).degrees();
        assert_abs_diff_eq!(right, 315.0, epsilon = 1e-9);
        let east = PathSegment::new(v(0.0, 0.0), v(100.0, 0.0)).unwrap();
        let above = los_desired_course(&east, &v(10.0, p.lookahead), &p).degrees();
        assert_abs_diff_eq!(above, 135.0, epsilon = 1e-9);
    }

    #[test]
    fn controller_on_course_is_symmetric() {
        let hull = HullParams::default();
        let p = params();
        let mut s = VesselState::at_rest(v(0.0, 0.0), Heading::new(45.0));
        s.surge_velocity = p.cruise_speed;
        let cmd = heading_controller(&s, Heading::new(45.0), &p, &hull);
        assert_eq!(cmd.nozzle_port, 0.0);
        assert_eq!(cmd.nozzle_starboard, 0.0);
        assert_eq!(cmd.thrust_port, cmd.thrust_starboard);
        assert_eq!(cmd.thrust_port, hull.damping_surge * p.cruise_speed / 2.0);
    }

    #[test]
    fn controller_saturates_clockwise() {
        let hull = HullParams::default();
        let s = VesselState::at_rest(v(0.0, 0.0), Heading::new(10.0));
        let cmd = heading_controller(&s, Heading::new(100.0), &params(), &hull);
        assert_eq!(cmd.nozzle_port, hull.nozzle_max);
        assert_eq!(cmd.nozzle_starboard, hull.nozzle_max);
        let f = crate::vessel::jet_forces(&cmd, &hull);
        assert!(f.yaw_moment > 0.0);
        let ccw = heading_controller(&s, Heading::new(280.0), &params(), &hull);
        assert_eq!(ccw.nozzle_port, -hull.nozzle_max);
    }

    #[test]
    fn waypoint_switching() {
        let p = params();
        let wps = vec![v(0.0, 0.0), v(200.0, 0.0), v(200.0, 200.0)];
        let g = GuidanceState::default();
        assert_eq!(waypoint_switch(g, &v(10.0, 0.0), &wps, &p).unwrap(), g);
        let g1 = waypoint_switch(g, &v(200.0, 0.0), &wps, &p).unwrap();
        assert_eq!(g1, GuidanceState { active_segment_index: 1, finished: false });
        let g2 = waypoint_switch(g1, &v(200.0, 200.0 - p.acceptance_radius / 2.0), &wps, &p).unwrap();
        assert_eq!(g2, GuidanceState { active_segment_index: 1, finished: true });
        assert_eq!(waypoint_switch(g, &v(0.0, 0.0), &wps[..1], &p), Err(GuidanceError::DegeneratePath));
    }

    fn run_leg(initial_offset: f64, drift: EnuVector<f64>, duration: f64) -> Vec<(f64, f64)> {
        let hull = HullParams::default();
        let p = params();
        let mut g = LosGuidance::new(vec![v(0.0, 0.0), v(500.0, 0.0)], p).unwrap();
        let mut s = VesselState::at_rest(v(0.0, initial_offset), Heading::new(90.0));
        let dist = Disturbance { drift_velocity: drift };
        let dt = 0.1;
        let steps = (duration / dt).round() as usize;
        let mut errors = Vec::with_capacity(steps);
        for k in 0..steps {
            let out = g.update(&s, &hull);
            errors.push((k as f64 * dt, out.cross_track_error));
            s = step(&s, &out.command, &dist, &hull, dt).unwrap();
        }
        errors
    }

    fn final_quarter_mean(errors: &[(f64, f64)]) -> f64 {
        let tail = &errors[errors.len() * 3 / 4..];
        tail.iter().map(|(_, e)| e.abs()).sum::<f64>() / tail.len() as f64
    }

    #[test]
    fn closed_loop_converges_from_offset() {
        let errors = run_leg(50.0, EnuVector::zero(), 150.0);
        assert!(final_quarter_mean(&errors) < 1.0);
    }

    #[test]
    fn drift_leaves_bounded_offset() {
        let errors = run_leg(0.0, v(0.0, 0.5), 150.0);
        let mean = final_quarter_mean(&errors);
        assert!(mean > 1.0 && mean < 10.0, "{mean}");
    }

    proptest! {
        #[test]
        fn correction_is_bounded_and_steers_back(e in -1e12f64..1e12, la in 1e-3f64..1e4, az in 0.0f64..360.0) {
            let c = course_correction(e, la);
            prop_assert!(c.abs() < 90.0);
            let rad = az.to_radians();
            let seg = PathSegment::new(v(0.0, 0.0), v(100.0 * rad.sin(), 100.0 * rad.cos())).unwrap();
            let p = LosParams { lookahead: la, ..params() };
            let pos = v(e * -rad.cos(), e * rad.sin());
            let course = los_desired_course(&seg, &pos, &p);
            prop_assert!(wrap_signed(course.degrees() - seg.azimuth().degrees()).abs() < 90.0);
            // moving along the desired course, the error shrinks
            let ahead = pos + v(course.radians().sin(), course.radians().cos()) * 1e-3;
            let rate = cross_track_error(&seg, &ahead) - cross_track_error(&seg, &pos);
            if e.abs() > 1e-6 && (e / la).abs() < 1e6 { prop_assert!(rate * e < 0.0); }
        }

        #[test]
        fn scaling_invariance(e in -1e4f64..1e4, la in 0.1f64..1e3, k in 1..20i32, general in 0.01f64..100.0) {
            // powers of two scale exactly in binary floating point
            let pow2 = 2f64.powi(k - 10);
            prop_assert_eq!(course_correction(e * pow2, la * pow2), course_correction(e, la));
            prop_assert!((course_correction(e * general, la * general) - course_correction(e, la)).abs() < 1e-9);
        }

        #[test]
        fn index_never_decreases(xs in proptest::collection::vec((-50.0f64..450.0, -50.0f64..250.0), 1..60)) {
            let p = params();
            let wps = vec![v(0.0, 0.0), v(200.0, 0.0), v(200.0, 200.0), v(400.0, 200.0)];
            let mut g = GuidanceState::default();
            for (x, y) in xs {
                let next = waypoint_switch(g, &v(x, y), &wps, &p).unwrap();
                prop_assert!(next.active_segment_index >= g.active_segment_index);
                prop_assert!(next.active_segment_index <= wps.len() - 2);
                prop_assert!(!g.finished || next.finished);
                g = next;
            }
        }
    }
}
