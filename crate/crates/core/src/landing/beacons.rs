//! Upward-shining colored deck lamps seen by a nadir camera, and deck yaw
//! from the lamps in view.

use serde::{Deserialize, Serialize};

use crate::geo::wrap_signed;
use crate::scalar::{lit, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LampColor {
    Red,
    Green,
    Blue,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(bound(deserialize = "S: Real + Deserialize<'de>"))]
pub struct Lamp<S> {
    pub color: LampColor,
    /// Deck frame: x forward, y starboard, z up, metres.
    pub position: [S; 3],
}

/// Lamps detected from `camera` (deck frame), in lamp order.
///
/// A lamp counts when it is within `visibility` metres and inside the
/// downward cone of half-angle `fov_half_angle` degrees.
pub fn led_visible<S: Real>(camera: [S; 3], lamps: &[Lamp<S>], visibility: S, fov_half_angle: S) -> Vec<LampColor> {
    let cos_half = fov_half_angle.to_radians().cos();
    lamps
        .iter()
        .filter(|lamp| {
            let d = [lamp.position[0] - camera[0], lamp.position[1] - camera[1], lamp.position[2] - camera[2]];
            let range = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
            range > S::zero() && range <= visibility && -d[2] >= range * cos_half
        })
        .map(|lamp| lamp.color)
        .collect()
}

/// A lamp as seen in the UAV body frame (x forward, y starboard), metres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LampSighting<S> {
    pub color: LampColor,
    pub body_xy: [S; 2],
}

/// Body-frame horizontal offset of a deck point for a UAV at `uav` with yaw
/// `yaw` degrees clockwise from the deck x axis.
pub fn to_body<S: Real>(point: [S; 3], uav: [S; 3], yaw: S) -> [S; 2] {
    let (s, c) = yaw.to_radians().sin_cos();
    let (dx, dy) = (point[0] - uav[0], point[1] - uav[1]);
    [c * dx + s * dy, -s * dx + c * dy]
}

/// UAV yaw relative to the deck, degrees in (-180, 180], from two or more
/// identified lamps. Circular mean over all lamp pairs.
pub fn deck_yaw<S: Real>(sightings: &[LampSighting<S>], lamps: &[Lamp<S>]) -> Option<S> {
    let matched: Vec<([S; 2], [S; 2])> = sightings
        .iter()
        .filter_map(|s| {
            lamps
                .iter()
                .find(|l| l.color == s.color)
                .map(|l| ([l.position[0], l.position[1]], s.body_xy))
        })
        .collect();
    let (mut sx, mut sy) = (S::zero(), S::zero());
    for i in 0..matched.len() {
        for j in i + 1..matched.len() {
            let (pi, bi) = matched[i];
            let (pj, bj) = matched[j];
            let deck = (pj[1] - pi[1]).atan2(pj[0] - pi[0]);
            let body = (bj[1] - bi[1]).atan2(bj[0] - bi[0]);
            let (s, c) = (deck - body).sin_cos();
            sx = sx + c;
            sy = sy + s;
        }
    }
    if sx == S::zero() && sy == S::zero() {
        return None;
    }
    Some(wrap_signed(sy.atan2(sx).to_degrees()))
}

/// Ultrasonic altimeter: a reading exists only below its maximum range.
pub fn ultrasonic_reading<S: Real>(height: S, max_range: S) -> Option<S> {
    (height >= S::zero() && height < max_range).then_some(height)
}

/// Default lamp triangle around the platform centre, radius 0.8 m.
pub fn default_lamps<S: Real>() -> Vec<Lamp<S>> {
    [(LampColor::Red, 0.0), (LampColor::Green, 120.0), (LampColor::Blue, 240.0)]
        .into_iter()
        .map(|(color, deg)| {
            let a = lit::<S>(deg).to_radians();
            let r = lit::<S>(0.8);
            Lamp { color, position: [r * a.cos(), r * a.sin(), S::zero()] }
        })
        .collect()
}
