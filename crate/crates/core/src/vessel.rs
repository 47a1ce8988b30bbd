//! Surge/sway/yaw motion model of a twin waterjet hull with thrust vectoring.
//!
//! Body frame: x forward, y to starboard, yaw positive clockwise seen from
//! above (so a positive yaw rate increases the compass heading). Both jets sit
//! `jet_aft_offset` behind the centre of gravity, `jet_lateral_offset` either
//! side of the centreline. A positive nozzle angle deflects the jet so that
//! the stern is pushed to port and the bow swings to starboard.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{EnuVector, Heading};
use crate::scalar::{clamp, lit, Real};

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum DynamicsError {
    #[error("dynamics divergence")]
    Divergence,
    #[error("time step {0} s outside (0, 1]")]
    InvalidTimeStep(f64),
    #[error("invalid hull parameter `{0}`")]
    InvalidHull(&'static str),
    #[error("jet command outside the actuator envelope: {0}")]
    InvalidCommand(&'static str),
}

/// Hull and actuator constants. No hydrodynamic coefficients are published
/// for the real boat, so these are plausible values for an 8 m, 5 t craft.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "S: Real + Deserialize<'de>"))]
#[serde(default, deny_unknown_fields)]
pub struct HullParams<S> {
    /// kg
    pub mass: S,
    /// kg·m²
    pub yaw_inertia: S,
    /// N per m/s
    pub damping_surge: S,
    /// N per m/s
    pub damping_sway: S,
    /// N·m per rad/s
    pub damping_yaw: S,
    pub jet_lateral_offset: S,
    pub jet_aft_offset: S,
    /// Per jet, N.
    pub max_thrust: S,
    /// Degrees.
    pub nozzle_max: S,
    /// Degrees per second.
    pub max_yaw_rate: S,
    /// Overall length, m. Used to derive the default guidance lookahead.
    pub length: S,
}

impl<S: Real> Default for HullParams<S> {
    fn default() -> Self {
        Self {
            mass: lit(5_000.0),
            yaw_inertia: lit(50_000.0),
            damping_surge: lit(4_000.0),
            damping_sway: lit(20_000.0),
            damping_yaw: lit(250_000.0),
            jet_lateral_offset: lit(0.6),
            jet_aft_offset: lit(4.0),
            max_thrust: lit(20_000.0),
            nozzle_max: lit(30.0),
            max_yaw_rate: lit(20.0),
            length: lit(8.0),
        }
    }
}

impl<S: Real> HullParams<S> {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        let positive = [
            (self.mass, "mass"),
            (self.yaw_inertia, "yaw_inertia"),
            (self.damping_surge, "damping_surge"),
            (self.damping_sway, "damping_sway"),
            (self.damping_yaw, "damping_yaw"),
            (self.jet_lateral_offset, "jet_lateral_offset"),
            (self.jet_aft_offset, "jet_aft_offset"),
            (self.max_thrust, "max_thrust"),
            (self.max_yaw_rate, "max_yaw_rate"),
            (self.length, "length"),
        ];
        for (value, name) in positive {
            if !(value.is_finite() && value > S::zero()) {
                return Err(DynamicsError::InvalidHull(name));
            }
        }
        if !(self.nozzle_max.is_finite() && self.nozzle_max >= S::zero() && self.nozzle_max < lit(90.0)) {
            return Err(DynamicsError::InvalidHull("nozzle_max"));
        }
        Ok(())
    }
}

/// Port/starboard jet actuation.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(bound(deserialize = "S: Real + Deserialize<'de>"))]
pub struct JetCommand<S> {
    pub thrust_port: S,
    pub thrust_starboard: S,
    pub nozzle_port: S,
    pub nozzle_starboard: S,
    /// Reverse bucket position, 0 = ahead, 1 = full astern.
    pub reverse_port: S,
    pub reverse_starboard: S,
}

impl<S: Real> JetCommand<S> {
    pub fn idle() -> Self {
        Self {
            thrust_port: S::zero(),
            thrust_starboard: S::zero(),
            nozzle_port: S::zero(),
            nozzle_starboard: S::zero(),
            reverse_port: S::zero(),
            reverse_starboard: S::zero(),
        }
    }

    /// Same thrust and nozzle on both jets, buckets up.
    pub fn symmetric(thrust: S, nozzle: S) -> Self {
        Self {
            thrust_port: thrust,
            thrust_starboard: thrust,
            nozzle_port: nozzle,
            nozzle_starboard: nozzle,
            ..Self::idle()
        }
    }

    /// Reflection across the centreline: jets swapped, nozzles negated.
    pub fn mirrored(self) -> Self {
        Self {
            thrust_port: self.thrust_starboard,
            thrust_starboard: self.thrust_port,
            nozzle_port: -self.nozzle_starboard,
            nozzle_starboard: -self.nozzle_port,
            reverse_port: self.reverse_starboard,
            reverse_starboard: self.reverse_port,
        }
    }

    /// Saturates every channel into the actuator envelope.
    pub fn clamped(self, hull: &HullParams<S>) -> Self {
        let (zero, one) = (S::zero(), S::one());
        Self {
            thrust_port: clamp(self.thrust_port, zero, hull.max_thrust),
            thrust_starboard: clamp(self.thrust_starboard, zero, hull.max_thrust),
            nozzle_port: clamp(self.nozzle_port, -hull.nozzle_max, hull.nozzle_max),
            nozzle_starboard: clamp(self.nozzle_starboard, -hull.nozzle_max, hull.nozzle_max),
            reverse_port: clamp(self.reverse_port, zero, one),
            reverse_starboard: clamp(self.reverse_starboard, zero, one),
        }
    }

    pub fn validate(&self, hull: &HullParams<S>) -> Result<(), DynamicsError> {
        let thrust_ok = |t: S| t >= S::zero() && t <= hull.max_thrust;
        let nozzle_ok = |n: S| n.abs() <= hull.nozzle_max;
        let bucket_ok = |r: S| r >= S::zero() && r <= S::one();
        if !(thrust_ok(self.thrust_port) && thrust_ok(self.thrust_starboard)) {
            return Err(DynamicsError::InvalidCommand("thrust"));
        }
        if !(nozzle_ok(self.nozzle_port) && nozzle_ok(self.nozzle_starboard)) {
            return Err(DynamicsError::InvalidCommand("nozzle"));
        }
        if !(bucket_ok(self.reverse_port) && bucket_ok(self.reverse_starboard)) {
            return Err(DynamicsError::InvalidCommand("reverse"));
        }
        Ok(())
    }
}

/// Net body-frame loads: surge force, sway force (N) and yaw moment (N·m).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BodyForces<S> {
    pub surge: S,
    pub sway: S,
    pub yaw_moment: S,
}

/// Uncompensated environmental drift, applied as a ground-frame velocity.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(bound(deserialize = "S: Real + Deserialize<'de>"))]
pub struct Disturbance<S> {
    pub drift_velocity: EnuVector<S>,
}

impl<S: Real> Disturbance<S> {
    pub fn calm() -> Self {
        Self { drift_velocity: EnuVector::zero() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "S: Real + Deserialize<'de>"))]
pub struct VesselState<S> {
    pub position: EnuVector<S>,
    pub heading: Heading<S>,
    /// m/s, body x.
    pub surge_velocity: S,
    /// m/s, body y.
    pub sway_velocity: S,
    /// deg/s, positive clockwise.
    pub yaw_rate: S,
}

impl<S: Real> VesselState<S> {
    pub fn at_rest(position: EnuVector<S>, heading: Heading<S>) -> Self {
        Self {
            position: position.flatten(),
            heading,
            surge_velocity: S::zero(),
            sway_velocity: S::zero(),
            yaw_rate: S::zero(),
        }
    }

    /// Velocity over ground without drift.
    pub fn earth_velocity(&self) -> EnuVector<S> {
        body_to_earth(self.heading, self.surge_velocity, self.sway_velocity)
    }

    pub fn kinetic_energy(&self, hull: &HullParams<S>) -> S {
        let half = lit::<S>(0.5);
        let r = self.yaw_rate.to_radians();
        half * hull.mass * (self.surge_velocity * self.surge_velocity + self.sway_velocity * self.sway_velocity)
            + half * hull.yaw_inertia * r * r
    }
}

fn body_to_earth<S: Real>(heading: Heading<S>, surge: S, sway: S) -> EnuVector<S> {
    let (sin, cos) = heading.radians().sin_cos();
    EnuVector::horizontal(surge * sin + sway * cos, surge * cos - sway * sin)
}

/// One jet's contribution; `lateral` is the signed y position of the nozzle.
fn single_jet<S: Real>(thrust: S, nozzle: S, reverse: S, lateral: S, aft: S) -> BodyForces<S> {
    let effective = thrust * (S::one() - lit::<S>(2.0) * reverse);
    let (sin, cos) = nozzle.to_radians().sin_cos();
    let fx = effective * cos;
    let fy = -(effective * sin);
    // moment = x·Fy - y·Fx with the jet at x = -aft
    let yaw_moment = aft * (effective * sin) - lateral * fx;
    BodyForces { surge: fx, sway: fy, yaw_moment }
}

/// Sums the two jets' vectored thrust into body-frame loads.
pub fn jet_forces<S: Real>(cmd: &JetCommand<S>, hull: &HullParams<S>) -> BodyForces<S> {
    let port = single_jet(
        cmd.thrust_port,
        cmd.nozzle_port,
        cmd.reverse_port,
        -hull.jet_lateral_offset,
        hull.jet_aft_offset,
    );
    let starboard = single_jet(
        cmd.thrust_starboard,
        cmd.nozzle_starboard,
        cmd.reverse_starboard,
        hull.jet_lateral_offset,
        hull.jet_aft_offset,
    );
    BodyForces {
        surge: port.surge + starboard.surge,
        sway: port.sway + starboard.sway,
        yaw_moment: port.yaw_moment + starboard.yaw_moment,
    }
}

/// Advances the hull by `dt` seconds.
///
/// Velocities are updated first with the damping term taken implicitly, then
/// heading and position are integrated with the new velocities. Drift is
/// added to the ground velocity before the position update.
pub fn step<S: Real>(
    state: &VesselState<S>,
    cmd: &JetCommand<S>,
    dist: &Disturbance<S>,
    hull: &HullParams<S>,
    dt: S,
) -> Result<VesselState<S>, DynamicsError> {
    if !(dt > S::zero() && dt <= S::one()) {
        return Err(DynamicsError::InvalidTimeStep(dt.to_f64_lossy()));
    }
    let f = jet_forces(cmd, hull);
    let one = S::one();

    let surge = (state.surge_velocity + dt * f.surge / hull.mass) / (one + dt * hull.damping_surge / hull.mass);
    let sway = (state.sway_velocity + dt * f.sway / hull.mass) / (one + dt * hull.damping_sway / hull.mass);
    let r = (state.yaw_rate.to_radians() + dt * f.yaw_moment / hull.yaw_inertia)
        / (one + dt * hull.damping_yaw / hull.yaw_inertia);
    let yaw_rate = clamp(r.to_degrees(), -hull.max_yaw_rate, hull.max_yaw_rate);

    let heading = Heading::new(state.heading.degrees() + yaw_rate * dt);
    let ground = body_to_earth(heading, surge, sway) + dist.drift_velocity.flatten();
    let position = state.position + ground * dt;

    let next = VesselState { position, heading, surge_velocity: surge, sway_velocity: sway, yaw_rate };
    if !(next.position.is_finite()
        && next.heading.degrees().is_finite()
        && surge.is_finite()
        && sway.is_finite()
        && yaw_rate.is_finite())
    {
        return Err(DynamicsError::Divergence);
    }
    Ok(next)
}
