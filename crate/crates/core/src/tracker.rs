//! Pan-only antenna tracker: rate-limited, quantized gimbal that keeps a dish
//! pointed at the peer from position reports and a compass heading.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{bearing, wrap_signed, GeoError, GeoPoint, GeoPose, Heading};
use crate::scalar::{lit, Real};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrackerError {
    #[error(transparent)]
    Geo(#[from] GeoError),
    #[error("invalid gimbal: {0}")]
    InvalidGimbal(&'static str),
    #[error("invalid time step {0}")]
    InvalidTimeStep(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
#[serde(bound(deserialize = "S: Real + Deserialize<'de>"))]
pub struct TrackerParams<S> {
    /// deg/s
    pub max_rate: S,
    /// Pan step of the drive, degrees; 0 for a continuous drive.
    pub quantization: S,
    /// Standard deviation of the compass heading, degrees.
    pub compass_sigma: S,
    /// Peer position reports per second.
    pub report_rate: S,
    /// Weight on the gyro-propagated heading in the heading filter, in [0, 1).
    pub heading_filter_gain: S,
}

impl<S: Real> Default for TrackerParams<S> {
    fn default() -> Self {
        Self {
            max_rate: lit(30.0),
            quantization: lit(1.0),
            compass_sigma: lit(2.0),
            report_rate: lit(1.0),
            heading_filter_gain: lit(0.9),
        }
    }
}

impl<S: Real> TrackerParams<S> {
    pub fn validate(&self) -> Result<(), &'static str> {
        GimbalState::new(S::zero(), self.max_rate, self.quantization).map_err(|e| match e {
            TrackerError::InvalidGimbal(f) => f,
            _ => "gimbal",
        })?;
        if !(self.compass_sigma.is_finite() && self.compass_sigma >= S::zero()) {
            return Err("compass_sigma");
        }
        if !(self.report_rate.is_finite() && self.report_rate > S::zero()) {
            return Err("report_rate");
        }
        if !(self.heading_filter_gain >= S::zero() && self.heading_filter_gain < S::one()) {
            return Err("heading_filter_gain");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "S: Real + Deserialize<'de>"))]
pub struct GimbalState<S> {
    /// Degrees relative to the carrier's bow, in (-180, 180].
    pub pan: S,
    /// deg/s
    pub max_rate: S,
    /// Degrees per drive step, 0 = continuous. Must divide 360.
    pub quantization: S,
}

impl<S: Real> GimbalState<S> {
    /// Validates the drive and snaps the initial pan onto the grid.
    pub fn new(pan: S, max_rate: S, quantization: S) -> Result<Self, TrackerError> {
        if !(max_rate.is_finite() && max_rate > S::zero()) {
            return Err(TrackerError::InvalidGimbal("max_rate"));
        }
        if !(quantization.is_finite() && quantization >= S::zero()) {
            return Err(TrackerError::InvalidGimbal("quantization"));
        }
        if quantization > S::zero() {
            let steps = lit::<S>(360.0) / quantization;
            if (steps - steps.round()).abs() > lit(1e-6) {
                return Err(TrackerError::InvalidGimbal("quantization"));
            }
        }
        if !pan.is_finite() {
            return Err(TrackerError::InvalidGimbal("pan"));
        }
        let mut g = Self { pan: S::zero(), max_rate, quantization };
        g.pan = g.snap(pan);
        Ok(g)
    }

    pub fn from_params(pan: S, params: &TrackerParams<S>) -> Result<Self, TrackerError> {
        Self::new(pan, params.max_rate, params.quantization)
    }

    fn snap(&self, angle: S) -> S {
        if self.quantization > S::zero() {
            wrap_signed((angle / self.quantization).round() * self.quantization)
        } else {
            wrap_signed(angle)
        }
    }

    /// Largest move allowed in `dt`, rounded down to whole drive steps.
    fn travel(&self, dt: S) -> S {
        let reach = self.max_rate * dt;
        if self.quantization > S::zero() {
            (reach / self.quantization).floor() * self.quantization
        } else {
            reach
        }
    }
}

/// Pan that puts the boresight on `peer`, relative to the bow.
pub fn target_pan<S: Real>(own: &GeoPose<S>, peer: &GeoPoint<S>) -> Result<S, TrackerError> {
    let b = bearing(&own.position, peer)?;
    Ok(b.signed_difference(own.heading))
}

/// Advances the gimbal toward `target` along the shorter arc.
///
/// The target is first snapped to the drive grid, and each step covers a whole
/// number of drive steps no larger than `max_rate·dt`, so the pan never
/// overshoots and never leaves the grid.
pub fn step_gimbal<S: Real>(g: &GimbalState<S>, target: S, dt: S) -> Result<GimbalState<S>, TrackerError> {
    if !(dt.is_finite() && dt > S::zero()) {
        return Err(TrackerError::InvalidTimeStep(dt.to_f64_lossy()));
    }
    let goal = g.snap(target);
    let arc = wrap_signed(goal - g.pan);
    let travel = g.travel(dt);
    let pan = if arc.abs() <= travel {
        goal
    } else {
        let moved = wrap_signed(g.pan + arc.signum() * travel);
        if g.quantization > S::zero() {
            g.snap(moved)
        } else {
            moved
        }
    };
    Ok(GimbalState { pan, ..*g })
}

/// Angle between the dish boresight and the true bearing to `peer`, degrees.
///
/// `own` is the carrier's true pose; compass error enters through the pan the
/// tracker chose from its noisy heading.
pub fn pointing_error<S: Real>(own: &GeoPose<S>, g: &GimbalState<S>, peer: &GeoPoint<S>) -> Result<S, TrackerError> {
    let b = bearing(&own.position, peer)?;
    Ok(b.signed_difference(boresight(own.heading, g)).abs())
}

/// Earth-frame azimuth of the dish.
pub fn boresight<S: Real>(heading: Heading<S>, g: &GimbalState<S>) -> Heading<S> {
    Heading::new(heading.degrees() + g.pan)
}

/// Last known peer position and its age.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "S: Real + Deserialize<'de>"))]
pub struct PeerBelief<S> {
    pub peer_position: GeoPoint<S>,
    /// Seconds since the last report.
    pub age: S,
}

impl<S: Real> PeerBelief<S> {
    pub fn fresh(peer_position: GeoPoint<S>) -> Self {
        Self { peer_position, age: S::zero() }
    }

    pub fn age_by(&mut self, dt: S) {
        self.age = self.age + dt;
    }

    pub fn report(&mut self, peer_position: GeoPoint<S>) {
        self.peer_position = peer_position;
        self.age = S::zero();
    }
}

/// Complementary heading filter: gyro-propagated estimate blended with the
/// compass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeadingFilter<S> {
    estimate: Option<Heading<S>>,
    gain: S,
}

impl<S: Real> HeadingFilter<S> {
    pub fn new(gain: S) -> Self {
        Self { estimate: None, gain }
    }

    pub fn estimate(&self) -> Option<Heading<S>> {
        self.estimate
    }

    /// `yaw_rate` in deg/s, clockwise positive.
    pub fn update(&mut self, compass: Heading<S>, yaw_rate: S, dt: S) -> Heading<S> {
        let next = match self.estimate {
            None => compass,
            Some(prev) => {
                let predicted = Heading::new(prev.degrees() + yaw_rate * dt);
                let innovation = compass.signed_difference(predicted);
                Heading::new(predicted.degrees() + (S::one() - self.gain) * innovation)
            }
        };
        self.estimate = Some(next);
        next
    }
}
