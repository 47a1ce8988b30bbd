//! Sight-line blockage by extruded polygonal obstacles (islands, ridges).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{geo_to_enu, EnuVector, GeoError, GeoPoint};
use crate::scalar::{lit, Real};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ObstacleError {
    #[error("obstacle {0}: polygon needs at least 3 vertices")]
    TooFewVertices(usize),
    #[error("obstacle {0}: polygon is self-intersecting")]
    SelfIntersecting(usize),
    #[error("obstacle {0}: height must be finite and non-negative")]
    InvalidHeight(usize),
    #[error("obstacle {0}: non-finite vertex")]
    NonFiniteVertex(usize),
}

/// Vertical prism: a horizontal polygon (east, north in the map frame) whose
/// top sits at `height` metres above the reference surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(bound(deserialize = "S: Real + Deserialize<'de>"))]
pub struct Obstacle<S> {
    pub polygon: Vec<[S; 2]>,
    pub height: S,
}

impl<S: Real> Obstacle<S> {
    /// Point-in-polygon by ray casting.
    pub fn contains(&self, east: S, north: S) -> bool {
        let pts = &self.polygon;
        let mut inside = false;
        let mut j = pts.len() - 1;
        for i in 0..pts.len() {
            let [xi, yi] = pts[i];
            let [xj, yj] = pts[j];
            if (yi > north) != (yj > north) && east < (xj - xi) * (north - yi) / (yj - yi) + xi {
                inside = !inside;
            }
            j = i;
        }
        inside
    }

    fn bounds(&self) -> ([S; 2], [S; 2]) {
        let mut lo = [S::infinity(); 2];
        let mut hi = [S::neg_infinity(); 2];
        for p in &self.polygon {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (lo, hi)
    }

    fn edges(&self) -> impl Iterator<Item = ([S; 2], [S; 2])> + '_ {
        let n = self.polygon.len();
        (0..n).map(move |i| (self.polygon[i], self.polygon[(i + 1) % n]))
    }
}

/// Obstacles expressed in the ENU frame anchored at `origin`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "S: Real + Deserialize<'de>"))]
pub struct ObstacleMap<S> {
    pub origin: GeoPoint<S>,
    pub obstacles: Vec<Obstacle<S>>,
}

impl<S: Real> ObstacleMap<S> {
    pub fn empty(origin: GeoPoint<S>) -> Self {
        Self { origin, obstacles: Vec::new() }
    }

    pub fn validate(&self) -> Result<(), ObstacleError> {
        for (i, o) in self.obstacles.iter().enumerate() {
            if o.polygon.len() < 3 {
                return Err(ObstacleError::TooFewVertices(i));
            }
            if !(o.height.is_finite() && o.height >= S::zero()) {
                return Err(ObstacleError::InvalidHeight(i));
            }
            if o.polygon.iter().any(|p| !(p[0].is_finite() && p[1].is_finite())) {
                return Err(ObstacleError::NonFiniteVertex(i));
            }
            let edges: Vec<_> = o.edges().collect();
            let n = edges.len();
            for a in 0..n {
                for b in a + 1..n {
                    let adjacent = b == a + 1 || (a == 0 && b == n - 1);
                    if !adjacent && segments_intersect(edges[a], edges[b]) {
                        return Err(ObstacleError::SelfIntersecting(i));
                    }
                }
            }
        }
        Ok(())
    }

    /// Altitude-aware position of a geodetic point in the map frame; `up`
    /// carries the absolute altitude.
    pub fn to_map_frame(&self, p: &GeoPoint<S>) -> Result<EnuVector<S>, GeoError> {
        let mut v = geo_to_enu(&self.origin, p)?;
        v.up = p.altitude;
        Ok(v)
    }
}

fn cross<S: Real>(a: [S; 2], b: [S; 2]) -> S {
    a[0] * b[1] - a[1] * b[0]
}

fn sub<S: Real>(a: [S; 2], b: [S; 2]) -> [S; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

fn segments_intersect<S: Real>((p, q): ([S; 2], [S; 2]), (r, s): ([S; 2], [S; 2])) -> bool {
    let d1 = cross(sub(q, p), sub(r, p));
    let d2 = cross(sub(q, p), sub(s, p));
    let d3 = cross(sub(s, r), sub(p, r));
    let d4 = cross(sub(s, r), sub(q, r));
    let zero = S::zero();
    ((d1 > zero && d2 < zero) || (d1 < zero && d2 > zero)) && ((d3 > zero && d4 < zero) || (d3 < zero && d4 > zero))
}

/// Whether the straight sight line between two points (map frame, `up` as
/// absolute altitude) passes through any obstacle below its top.
///
/// The segment is split at every polygon-edge crossing; each piece whose
/// midpoint lies inside a polygon is blocked when the line's altitude at
/// either end of the piece is below the obstacle height.
pub fn los_blocked_enu<S: Real>(a: &EnuVector<S>, b: &EnuVector<S>, obstacles: &[Obstacle<S>]) -> bool {
    // canonical order makes the test exactly symmetric in its endpoints
    let key = |v: &EnuVector<S>| (v.east, v.north, v.up);
    let (a, b) = match key(a).partial_cmp(&key(b)) {
        Some(std::cmp::Ordering::Greater) => (b, a),
        _ => (a, b),
    };
    let d = [b.east - a.east, b.north - a.north];
    let start = [a.east, a.north];
    let seg_lo = [a.east.min(b.east), a.north.min(b.north)];
    let seg_hi = [a.east.max(b.east), a.north.max(b.north)];
    let altitude = |t: S| a.up + (b.up - a.up) * t;
    let half = lit::<S>(0.5);

    for obstacle in obstacles {
        if a.up >= obstacle.height && b.up >= obstacle.height {
            continue;
        }
        let (lo, hi) = obstacle.bounds();
        if seg_hi[0] < lo[0] || seg_lo[0] > hi[0] || seg_hi[1] < lo[1] || seg_lo[1] > hi[1] {
            continue;
        }
        if d[0] == S::zero() && d[1] == S::zero() {
            if obstacle.contains(a.east, a.north) {
                return true;
            }
            continue;
        }
        let mut ts = vec![S::zero(), S::one()];
        for (p, q) in obstacle.edges() {
            let e = sub(q, p);
            let denom = cross(d, e);
            if denom == S::zero() {
                continue;
            }
            let ap = sub(p, start);
            let t = cross(ap, e) / denom;
            let s = cross(ap, d) / denom;
            if t >= S::zero() && t <= S::one() && s >= S::zero() && s <= S::one() {
                ts.push(t);
            }
        }
        ts.sort_by(|x, y| x.partial_cmp(y).expect("finite crossing parameter"));
        for w in ts.windows(2) {
            let (t0, t1) = (w[0], w[1]);
            if t1 <= t0 {
                continue;
            }
            let tm = (t0 + t1) * half;
            if obstacle.contains(start[0] + d[0] * tm, start[1] + d[1] * tm)
                && altitude(t0).min(altitude(t1)) < obstacle.height
            {
                return true;
            }
        }
    }
    false
}

/// [`los_blocked_enu`] for geodetic endpoints.
pub fn los_blocked<S: Real>(a: &GeoPoint<S>, b: &GeoPoint<S>, map: &ObstacleMap<S>) -> Result<bool, GeoError> {
    if map.obstacles.is_empty() {
        return Ok(false);
    }
    Ok(los_blocked_enu(&map.to_map_frame(a)?, &map.to_map_frame(b)?, &map.obstacles))
}
