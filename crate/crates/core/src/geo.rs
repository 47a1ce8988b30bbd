//! Geodetic points, the local east-north-up frame, and angle arithmetic.
//!
//! The local frame uses a spherical Earth (radius [`EARTH_RADIUS_M`]) and an
//! equirectangular projection evaluated at the mean latitude of the two
//! points. Over lake-scale distances (tens of kilometres) this agrees with
//! great-circle distances to well under 0.1 %.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{lit, Real};

/// Mean Earth radius used for all projections, metres.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum GeoError {
    #[error("latitude {0} outside [-90, 90]")]
    LatitudeOutOfRange(f64),
    #[error("longitude {0} outside (-180, 180]")]
    LongitudeOutOfRange(f64),
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("undefined bearing")]
    UndefinedBearing,
}

/// Geodetic position in degrees, altitude in metres above the reference surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "S: Real + Deserialize<'de>"))]
#[serde(deny_unknown_fields)]
pub struct GeoPoint<S> {
    pub latitude: S,
    pub longitude: S,
    #[serde(default)]
    pub altitude: S,
}

impl<S: Real> GeoPoint<S> {
    pub fn new(latitude: S, longitude: S, altitude: S) -> Result<Self, GeoError> {
        let p = Self { latitude, longitude, altitude };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), GeoError> {
        if !(self.latitude.is_finite() && self.longitude.is_finite() && self.altitude.is_finite()) {
            return Err(GeoError::NonFinite);
        }
        if self.latitude < lit(-90.0) || self.latitude > lit(90.0) {
            return Err(GeoError::LatitudeOutOfRange(self.latitude.to_f64_lossy()));
        }
        if self.longitude <= lit(-180.0) || self.longitude > lit(180.0) {
            return Err(GeoError::LongitudeOutOfRange(self.longitude.to_f64_lossy()));
        }
        Ok(())
    }

    /// Same horizontal position at a different altitude.
    pub fn with_altitude(self, altitude: S) -> Self {
        Self { altitude, ..self }
    }
}

/// Displacement in a local east-north-up frame, metres.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(bound(deserialize = "S: Real + Deserialize<'de>"))]
#[serde(deny_unknown_fields)]
pub struct EnuVector<S> {
    pub east: S,
    pub north: S,
    #[serde(default)]
    pub up: S,
}

impl<S: Real> EnuVector<S> {
    pub fn new(east: S, north: S, up: S) -> Self {
        Self { east, north, up }
    }

    pub fn horizontal(east: S, north: S) -> Self {
        Self { east, north, up: S::zero() }
    }

    pub fn zero() -> Self {
        Self::new(S::zero(), S::zero(), S::zero())
    }

    pub fn norm(&self) -> S {
        (self.east * self.east + self.north * self.north + self.up * self.up).sqrt()
    }

    pub fn horizontal_norm(&self) -> S {
        self.east.hypot(self.north)
    }

    /// Projection onto the horizontal plane.
    pub fn flatten(self) -> Self {
        Self { up: S::zero(), ..self }
    }

    pub fn is_finite(&self) -> bool {
        self.east.is_finite() && self.north.is_finite() && self.up.is_finite()
    }

    /// Compass azimuth of the horizontal part, `None` for a vertical or zero vector.
    pub fn azimuth(&self) -> Option<Heading<S>> {
        if self.horizontal_norm() == S::zero() {
            None
        } else {
            Some(Heading::new(self.east.atan2(self.north).to_degrees()))
        }
    }
}

impl<S: Real> Add for EnuVector<S> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.east + rhs.east, self.north + rhs.north, self.up + rhs.up)
    }
}

impl<S: Real> AddAssign for EnuVector<S> {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl<S: Real> Sub for EnuVector<S> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.east - rhs.east, self.north - rhs.north, self.up - rhs.up)
    }
}

impl<S: Real> Neg for EnuVector<S> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.east, -self.north, -self.up)
    }
}

impl<S: Real> Mul<S> for EnuVector<S> {
    type Output = Self;
    fn mul(self, k: S) -> Self {
        Self::new(self.east * k, self.north * k, self.up * k)
    }
}

/// Compass heading in degrees clockwise from true north, kept in `[0, 360)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(bound(deserialize = "S: Real + Deserialize<'de>"))]
#[serde(transparent)]
pub struct Heading<S>(S);

impl<S: Real> Heading<S> {
    /// Normalises any finite angle into `[0, 360)`.
    pub fn new(degrees: S) -> Self {
        let full = lit::<S>(360.0);
        let mut r = degrees % full;
        if r < S::zero() {
            r = r + full;
        }
        // -1e-20 + 360 rounds to 360
        if r >= full || r == S::zero() {
            r = S::zero();
        }
        Self(r)
    }

    pub fn degrees(self) -> S {
        self.0
    }

    pub fn radians(self) -> S {
        self.0.to_radians()
    }

    /// Signed difference `self - other` wrapped into `(-180, 180]`.
    pub fn signed_difference(self, other: Self) -> S {
        wrap_signed(self.0 - other.0)
    }
}

/// Global position plus orientation of a node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "S: Real + Deserialize<'de>"))]
pub struct GeoPose<S> {
    pub position: GeoPoint<S>,
    pub heading: Heading<S>,
}

impl<S: Real> GeoPose<S> {
    pub fn new(position: GeoPoint<S>, heading: Heading<S>) -> Self {
        Self { position, heading }
    }
}

/// Wraps an angle in degrees into `(-180, 180]`.
pub fn wrap_signed<S: Real>(angle: S) -> S {
    let full = lit::<S>(360.0);
    let half = lit::<S>(180.0);
    let mut r = angle % full;
    if r > half {
        r = r - full;
    } else if r <= -half {
        r = r + full;
    }
    r
}

/// Local ENU displacement of `point` relative to `origin`.
pub fn geo_to_enu<S: Real>(origin: &GeoPoint<S>, point: &GeoPoint<S>) -> Result<EnuVector<S>, GeoError> {
    origin.validate()?;
    point.validate()?;
    let radius = lit::<S>(EARTH_RADIUS_M);
    let dlat = (point.latitude - origin.latitude).to_radians();
    let dlon = wrap_signed(point.longitude - origin.longitude).to_radians();
    let mean_lat = origin.latitude.to_radians() + dlat / lit(2.0);
    Ok(EnuVector {
        east: radius * dlon * mean_lat.cos(),
        north: radius * dlat,
        up: point.altitude - origin.altitude,
    })
}

/// Inverse of [`geo_to_enu`].
pub fn enu_to_geo<S: Real>(origin: &GeoPoint<S>, offset: &EnuVector<S>) -> Result<GeoPoint<S>, GeoError> {
    origin.validate()?;
    if !offset.is_finite() {
        return Err(GeoError::NonFinite);
    }
    let radius = lit::<S>(EARTH_RADIUS_M);
    let dlat = offset.north / radius;
    let latitude = origin.latitude + dlat.to_degrees();
    let mean_lat = origin.latitude.to_radians() + dlat / lit(2.0);
    let dlon = (offset.east / (radius * mean_lat.cos())).to_degrees();
    GeoPoint::new(latitude, wrap_signed(origin.longitude + dlon), origin.altitude + offset.up)
}

/// Azimuth of `target` as seen from `origin`, clockwise from north.
pub fn bearing<S: Real>(origin: &GeoPoint<S>, target: &GeoPoint<S>) -> Result<Heading<S>, GeoError> {
    geo_to_enu(origin, target)?.azimuth().ok_or(GeoError::UndefinedBearing)
}

/// Horizontal great-circle-equivalent distance in the local frame, metres.
pub fn horizontal_distance<S: Real>(a: &GeoPoint<S>, b: &GeoPoint<S>) -> Result<S, GeoError> {
    Ok(geo_to_enu(a, b)?.horizontal_norm())
}
