//! UAV relay placement: where and how high a UAV must hover to bridge a
//! blocked GCS-USV link, and what the two-hop path then delivers.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{enu_to_geo, geo_to_enu, EnuVector, GeoError, GeoPoint};
use crate::radio::{
    link_rssi, los_blocked, InterfaceConfig, InterfaceKind, LinkEnd, LinkEnvironment, LinkSample, Pointing,
    RadioError, RadioNode,
};
use crate::scalar::{lit, Real};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RelayError {
    #[error("relay infeasible")]
    Infeasible,
    #[error("node `{node}` lacks a {kind:?} interface")]
    MissingInterface { node: String, kind: InterfaceKind },
    #[error("invalid relay policy: {0}")]
    InvalidPolicy(&'static str),
    #[error(transparent)]
    Radio(#[from] RadioError),
    #[error(transparent)]
    Geo(#[from] GeoError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
#[serde(bound(deserialize = "S: Real + Deserialize<'de>"))]
pub struct RelayPolicy<S> {
    pub enabled: bool,
    /// Lowest hover altitude, metres.
    pub min_altitude: S,
    /// Highest hover altitude, metres.
    pub max_altitude: S,
    /// Spacing of the altitude search, metres.
    pub altitude_step: S,
    /// Number of evenly spaced hover candidates on the GCS-USV segment,
    /// endpoints included.
    pub candidates: usize,
    /// Gain of the UAV's directional interface relative to the GCS dish, dB.
    pub uav_gain_offset: S,
    /// Added per forwarded packet, ms.
    pub forwarding_delay: S,
    /// UAV cruise speed to the hover point, m/s.
    pub transit_speed: S,
    /// Noiseless RSSI a hop needs above its floor to count as usable when
    /// ranking hover points, dB.
    pub fade_margin: S,
}

impl<S: Real> Default for RelayPolicy<S> {
    fn default() -> Self {
        Self {
            enabled: false,
            min_altitude: lit(10.0),
            max_altitude: lit(150.0),
            altitude_step: lit(1.0),
            candidates: 11,
            uav_gain_offset: lit(-3.0),
            forwarding_delay: lit(2.0),
            transit_speed: lit(15.0),
            fade_margin: lit(6.0),
        }
    }
}

impl<S: Real> RelayPolicy<S> {
    pub fn validate(&self) -> Result<(), RelayError> {
        if !(self.min_altitude.is_finite() && self.min_altitude >= S::zero()) {
            return Err(RelayError::InvalidPolicy("min_altitude"));
        }
        if !(self.max_altitude.is_finite() && self.max_altitude >= self.min_altitude) {
            return Err(RelayError::InvalidPolicy("max_altitude"));
        }
        if !(self.altitude_step.is_finite() && self.altitude_step > S::zero()) {
            return Err(RelayError::InvalidPolicy("altitude_step"));
        }
        if self.candidates < 2 {
            return Err(RelayError::InvalidPolicy("candidates"));
        }
        if !self.uav_gain_offset.is_finite() {
            return Err(RelayError::InvalidPolicy("uav_gain_offset"));
        }
        if !(self.forwarding_delay.is_finite() && self.forwarding_delay >= S::zero()) {
            return Err(RelayError::InvalidPolicy("forwarding_delay"));
        }
        if !(self.transit_speed.is_finite() && self.transit_speed > S::zero()) {
            return Err(RelayError::InvalidPolicy("transit_speed"));
        }
        if !(self.fade_margin.is_finite() && self.fade_margin >= S::zero()) {
            return Err(RelayError::InvalidPolicy("fade_margin"));
        }
        Ok(())
    }

    /// The UAV's directional interface: the GCS dish with the configured gain
    /// offset.
    pub fn uav_directional(&self, gcs_dish: &InterfaceConfig<S>) -> InterfaceConfig<S> {
        InterfaceConfig { pattern: gcs_dish.pattern.with_gain_offset(self.uav_gain_offset), ..*gcs_dish }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "S: Real + Deserialize<'de>"))]
pub struct RelayPlan<S> {
    pub deploy: bool,
    /// Hover point; the altitude is the commanded height.
    pub hover_position: Option<GeoPoint<S>>,
    /// Mbps
    pub expected_end_to_end_throughput: S,
}

/// Two-hop performance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelayPath<S> {
    pub gcs_uav: LinkSample<S>,
    pub uav_usv: LinkSample<S>,
    pub connected: bool,
    /// Mbps
    pub throughput: S,
    /// ms, absent unless both hops are up.
    pub latency: Option<S>,
}

/// Combines two hops: the slower hop sets the throughput and latencies add.
pub fn relay_path<S: Real>(gcs_uav: LinkSample<S>, uav_usv: LinkSample<S>, forwarding_delay: S) -> RelayPath<S> {
    let connected = gcs_uav.connected && uav_usv.connected;
    let latency = match (gcs_uav.latency, uav_usv.latency) {
        (Some(a), Some(b)) if connected => Some(a + b + forwarding_delay),
        _ => None,
    };
    RelayPath {
        gcs_uav,
        uav_usv,
        connected,
        throughput: if connected { gcs_uav.throughput.min(uav_usv.throughput) } else { S::zero() },
        latency,
    }
}

/// Lowest altitude on the search grid at which a UAV over `hover_2d` (east,
/// north in the obstacle map frame) sees both the GCS and the USV.
pub fn min_relay_altitude<S: Real>(
    gcs: &GeoPoint<S>,
    usv: &GeoPoint<S>,
    hover_2d: [S; 2],
    obstacles: &crate::radio::ObstacleMap<S>,
    policy: &RelayPolicy<S>,
) -> Result<S, RelayError> {
    let mut k = 0usize;
    loop {
        let h = policy.min_altitude + S::from_count(k) * policy.altitude_step;
        if h > policy.max_altitude + lit(1e-9) {
            return Err(RelayError::Infeasible);
        }
        let hover = hover_point(obstacles, hover_2d, h)?;
        if !los_blocked(gcs, &hover, obstacles)? && !los_blocked(&hover, usv, obstacles)? {
            return Ok(h);
        }
        k += 1;
    }
}

fn hover_point<S: Real>(map: &crate::radio::ObstacleMap<S>, hover_2d: [S; 2], altitude: S) -> Result<GeoPoint<S>, GeoError> {
    let p = enu_to_geo(&map.origin.with_altitude(S::zero()), &EnuVector::horizontal(hover_2d[0], hover_2d[1]))?;
    Ok(p.with_altitude(altitude))
}

fn require<S: Real>(node: &RadioNode<S>, kind: InterfaceKind) -> Result<&InterfaceConfig<S>, RelayError> {
    node.interface(kind).ok_or_else(|| RelayError::MissingInterface { node: node.id.clone(), kind })
}

/// Whether both hops of `path` clear their floors by the policy fade margin.
pub fn hops_have_margin<S: Real>(path: &RelayPath<S>, up_floor: S, down_floor: S, policy: &RelayPolicy<S>) -> bool {
    path.connected
        && path.gcs_uav.rssi >= up_floor + policy.fade_margin
        && path.uav_usv.rssi >= down_floor + policy.fade_margin
}

/// Hop samples for a UAV hovering at `hover`.
///
/// GCS dish to UAV directional interface, both on target; then UAV omni to the
/// USV omni interface, or the USV dish if it has no omni.
pub fn relay_hops<S: Real>(
    gcs: &RadioNode<S>,
    usv: &RadioNode<S>,
    uav: &RadioNode<S>,
    hover: &GeoPoint<S>,
    env: &LinkEnvironment<'_, S>,
    policy: &RelayPolicy<S>,
) -> Result<RelayPath<S>, RelayError> {
    let gcs_dish = require(gcs, InterfaceKind::WifiDirectional)?;
    let uav_dish = require(uav, InterfaceKind::WifiDirectional)?;
    let uav_omni = require(uav, InterfaceKind::WifiOmni)?;
    let usv_if = usv
        .interface(InterfaceKind::WifiOmni)
        .map_or_else(|| require(usv, InterfaceKind::WifiDirectional), Ok)?;

    let up = link_rssi(
        &LinkEnd::new(gcs.position, gcs_dish, Pointing::Aligned),
        &LinkEnd::new(*hover, uav_dish, Pointing::Aligned),
        env,
    )?;
    let down = link_rssi(
        &LinkEnd::new(*hover, uav_omni, Pointing::Aligned),
        &LinkEnd::new(usv.position, usv_if, Pointing::Aligned),
        env,
    )?;
    Ok(relay_path(up, down, policy.forwarding_delay))
}

/// Decides whether to deploy the relay and where.
///
/// Deploys only when the direct WiFi sight line is blocked. Candidate hover
/// points are spread evenly from the GCS to directly over the USV. Among the
/// candidates with a clear altitude, those whose two hops both connect with
/// the fade margin are preferred; then the lowest altitude wins, ties going to the candidate
/// nearest the USV.
pub fn plan_relay<S: Real>(
    gcs: &RadioNode<S>,
    usv: &RadioNode<S>,
    uav: &RadioNode<S>,
    env: &LinkEnvironment<'_, S>,
    policy: &RelayPolicy<S>,
) -> Result<RelayPlan<S>, RelayError> {
    policy.validate()?;
    let map = env.obstacles;
    if !los_blocked(&gcs.position, &usv.position, map)? {
        return Ok(RelayPlan { deploy: false, hover_position: None, expected_end_to_end_throughput: S::zero() });
    }
    let frame = map.origin.with_altitude(S::zero());
    let a = geo_to_enu(&frame, &gcs.position)?;
    let b = geo_to_enu(&frame, &usv.position)?;
    let up_floor = require(uav, InterfaceKind::WifiDirectional)?.rssi_floor;
    let down_floor = usv
        .interface(InterfaceKind::WifiOmni)
        .map_or_else(|| require(usv, InterfaceKind::WifiDirectional), Ok)?
        .rssi_floor;
    let last = policy.candidates - 1;
    let mut best: Option<(bool, S, GeoPoint<S>, RelayPath<S>)> = None;
    for i in (0..=last).rev() {
        let t = S::from_count(i) / S::from_count(last);
        let xy = [a.east + (b.east - a.east) * t, a.north + (b.north - a.north) * t];
        let h = match min_relay_altitude(&gcs.position, &usv.position, xy, map, policy) {
            Ok(h) => h,
            Err(RelayError::Infeasible) => continue,
            Err(e) => return Err(e),
        };
        let hover = hover_point(map, xy, h)?;
        let path = relay_hops(gcs, usv, uav, &hover, env, policy)?;
        let usable = hops_have_margin(&path, up_floor, down_floor, policy);
        let better = match &best {
            None => true,
            Some((u, bh, _, _)) => (usable && !u) || (usable == *u && h < *bh),
        };
        if better {
            best = Some((usable, h, hover, path));
        }
    }
    let (_, _, hover, path) = best.ok_or(RelayError::Infeasible)?;
    Ok(RelayPlan { deploy: true, hover_position: Some(hover), expected_end_to_end_throughput: path.throughput })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radio::{Obstacle, ObstacleMap};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn origin() -> GeoPoint<f64> {
        GeoPoint::new(61.45, 23.85, 0.0).unwrap()
    }

    fn at(e: f64, n: f64, u: f64) -> GeoPoint<f64> {
        enu_to_geo(&origin(), &EnuVector::new(e, n, u)).unwrap()
    }

    /// Ridge across the x axis, `width` metres thick, centred at `x`.
    fn ridge(x: f64, width: f64, height: f64) -> ObstacleMap<f64> {
        let h = width / 2.0;
        ObstacleMap {
            origin: origin(),
            obstacles: vec![Obstacle {
                polygon: vec![[x - h, -500.0], [x + h, -500.0], [x + h, 500.0], [x - h, 500.0]],
                height,
            }],
        }
    }

    fn policy() -> RelayPolicy<f64> {
        RelayPolicy { enabled: true, min_altitude: 0.0, ..RelayPolicy::default() }
    }

    /// Brute force: lowest integer altitude whose two straight lines clear a
    /// ridge occupying x in [x0, x1], checked by dense sampling.
    fn oracle(gcs: [f64; 3], usv: [f64; 3], hover_x: f64, x0: f64, x1: f64, top: f64) -> f64 {
        let clear = |p: [f64; 3], q: [f64; 3]| {
            (0..=20_000).all(|k| {
                let t = k as f64 / 20_000.0;
                let x = p[0] + (q[0] - p[0]) * t;
                let z = p[2] + (q[2] - p[2]) * t;
                !(x > x0 && x < x1 && z < top)
            })
        };
        (0..=150)
            .map(|h| h as f64)
            .find(|&h| clear(gcs, [hover_x, 0.0, h]) && clear([hover_x, 0.0, h], usv))
            .unwrap()
    }

    #[test]
    fn no_obstacles_needs_only_the_floor() {
        let map = ObstacleMap::empty(origin());
        let p = RelayPolicy::default();
        let h = min_relay_altitude(&at(0.0, 0.0, 5.0), &at(4000.0, 0.0, 3.0), [4000.0, 0.0], &map, &p).unwrap();
        assert_eq!(h, p.min_altitude);
    }

    #[test]
    fn ridge_example_over_usv() {
        let map = ridge(2000.0, 20.0, 50.0);
        let h = min_relay_altitude(&at(0.0, 0.0, 5.0), &at(4000.0, 0.0, 3.0), [4000.0, 0.0], &map, &policy()).unwrap();
        // similar triangles against the near face of the ridge
        let analytic: f64 = 5.0 + 45.0 / (1990.0 / 4000.0);
        assert_eq!(h, analytic.ceil());
        assert!((h - 95.0).abs() <= 1.0);
        assert_eq!(h, oracle([0.0, 0.0, 5.0], [4000.0, 0.0, 3.0], 4000.0, 1990.0, 2010.0, 50.0));
    }

    #[test]
    fn ridge_example_at_midpoint() {
        let map = ridge(2000.0, 20.0, 50.0);
        let h = min_relay_altitude(&at(0.0, 0.0, 5.0), &at(4000.0, 0.0, 3.0), [2000.0, 0.0], &map, &policy()).unwrap();
        assert!((h - 50.0).abs() <= 1.0, "{h}");
        assert_eq!(h, oracle([0.0, 0.0, 5.0], [4000.0, 0.0, 3.0], 2000.0, 1990.0, 2010.0, 50.0));
    }

    #[test]
    fn tall_obstacle_is_infeasible() {
        let map = ridge(2000.0, 20.0, 400.0);
        let r = min_relay_altitude(&at(0.0, 0.0, 5.0), &at(4000.0, 0.0, 3.0), [4000.0, 0.0], &map, &policy());
        assert_eq!(r, Err(RelayError::Infeasible));
    }

    fn nodes() -> (RadioNode<f64>, RadioNode<f64>, RadioNode<f64>) {
        let dish = InterfaceConfig::default_for(InterfaceKind::WifiDirectional);
        let omni = InterfaceConfig::default_for(InterfaceKind::WifiOmni);
        let lte = InterfaceConfig::default_for(InterfaceKind::Lte);
        let gcs = RadioNode { id: "gcs".into(), position: at(0.0, 0.0, 5.0), interfaces: vec![dish, lte] };
        let usv = RadioNode { id: "usv".into(), position: at(4000.0, 0.0, 3.0), interfaces: vec![dish, omni, lte] };
        let uav_dish = policy().uav_directional(&dish);
        let uav = RadioNode { id: "uav".into(), position: at(4000.0, 0.0, 3.0), interfaces: vec![uav_dish, omni] };
        (gcs, usv, uav)
    }

    fn env(map: &ObstacleMap<f64>) -> LinkEnvironment<'_, f64> {
        LinkEnvironment { obstacles: map, path_loss_exponent: 2.0, blockage_penalty: 40.0, lte_in_coverage: true }
    }

    #[test]
    fn clear_direct_link_does_not_deploy() {
        let (gcs, usv, uav) = nodes();
        let map = ObstacleMap::empty(origin());
        let plan = plan_relay(&gcs, &usv, &uav, &env(&map), &policy()).unwrap();
        assert!(!plan.deploy);
        assert_eq!(plan.hover_position, None);
    }

    #[test]
    fn blocked_link_deploys_with_clear_hops() {
        let (gcs, usv, uav) = nodes();
        let map = ridge(2000.0, 20.0, 50.0);
        let plan = plan_relay(&gcs, &usv, &uav, &env(&map), &policy()).unwrap();
        assert!(plan.deploy);
        let hover = plan.hover_position.unwrap();
        assert!(!los_blocked(&gcs.position, &hover, &map).unwrap());
        assert!(!los_blocked(&hover, &usv.position, &map).unwrap());
        // the midpoint is lowest, but its 2 km omni hop does not close. Free
        // space range of the omni hop with the fade margin: 20 + 5 + 5 - L = -80 + 6
        let budget: f64 = 20.0 + 10.0 + 80.0 - 6.0;
        let reach = 10f64.powf((budget - 20.0 * 5.8e9f64.log10() + 147.55) / 20.0);
        assert!(reach > 400.0 && reach < 800.0, "{reach}");
        // so the last candidate but one, 400 m short of the USV
        let xy = geo_to_enu(&origin(), &hover).unwrap();
        assert_abs_diff_eq!(xy.east, 3600.0, epsilon = 1e-6);
        let path = relay_hops(&gcs, &usv, &uav, &hover, &env(&map), &policy()).unwrap();
        assert!(path.connected);
        assert_eq!(plan.expected_end_to_end_throughput, path.gcs_uav.throughput.min(path.uav_usv.throughput));
        assert!(plan.expected_end_to_end_throughput > 0.0);
    }

    #[test]
    fn ties_go_to_the_usv_end() {
        let (gcs, usv, uav) = nodes();
        // a low ridge next to the USV: every candidate clears at the floor
        let map = ridge(3800.0, 20.0, 4.5);
        let p = RelayPolicy { min_altitude: 10.0, ..policy() };
        let plan = plan_relay(&gcs, &usv, &uav, &env(&map), &p).unwrap();
        let xy = geo_to_enu(&origin(), &plan.hover_position.unwrap()).unwrap();
        assert_abs_diff_eq!(xy.east, 4000.0, epsilon = 1e-6);
    }

    #[test]
    fn plan_infeasible_everywhere() {
        let (gcs, usv, uav) = nodes();
        let map = ridge(2000.0, 20.0, 400.0);
        assert_eq!(plan_relay(&gcs, &usv, &uav, &env(&map), &policy()), Err(RelayError::Infeasible));
    }

    #[test]
    fn uav_missing_omni_is_reported() {
        let (gcs, usv, mut uav) = nodes();
        uav.interfaces.retain(|i| i.kind != InterfaceKind::WifiOmni);
        let map = ridge(2000.0, 20.0, 50.0);
        assert!(matches!(
            plan_relay(&gcs, &usv, &uav, &env(&map), &policy()),
            Err(RelayError::MissingInterface { kind: InterfaceKind::WifiOmni, .. })
        ));
    }

    #[test]
    fn min_rule_example() {
        let wifi = InterfaceConfig::default_for(InterfaceKind::WifiDirectional);
        let lte = InterfaceConfig::default_for(InterfaceKind::Lte);
        let a = LinkSample::from_rssi(-30.0, false, &wifi, true);
        let b = LinkSample::from_rssi(-30.0, false, &lte, true);
        assert_eq!((a.throughput, b.throughput), (400.0, 100.0));
        let p = relay_path(a, b, 2.0);
        assert_eq!(p.throughput, 100.0);
        assert_eq!(p.latency, Some(5.0 + 40.0 + 2.0));
    }

    proptest! {
        #[test]
        fn two_hop_bounded_by_each_hop(r1 in -110.0f64..-20.0, r2 in -110.0f64..-20.0, fwd in 0.0f64..10.0) {
            let wifi = InterfaceConfig::default_for(InterfaceKind::WifiDirectional);
            let a = LinkSample::from_rssi(r1, false, &wifi, true);
            let b = LinkSample::from_rssi(r2, false, &wifi, true);
            let p = relay_path(a, b, fwd);
            prop_assert!(p.throughput <= a.throughput && p.throughput <= b.throughput);
            if let Some(l) = p.latency {
                prop_assert_eq!(l, a.latency.unwrap() + b.latency.unwrap() + fwd);
            }
        }

        #[test]
        fn altitude_monotone_in_obstacle_height(top in 5.0f64..120.0, lower in 0.0f64..1.0, hover_x in 0.0f64..4000.0) {
            let gcs = at(0.0, 0.0, 5.0);
            let usv = at(4000.0, 0.0, 3.0);
            let p = policy();
            let tall = min_relay_altitude(&gcs, &usv, [hover_x, 0.0], &ridge(2000.0, 20.0, top), &p);
            let short = min_relay_altitude(&gcs, &usv, [hover_x, 0.0], &ridge(2000.0, 20.0, top * lower), &p);
            match (tall, short) {
                (Ok(t), Ok(s)) => prop_assert!(s <= t),
                (Err(_), _) => {}
                (Ok(_), Err(e)) => prop_assert!(false, "{e}"),
            }
        }
    }
}
