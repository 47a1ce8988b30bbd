//! Fixed-step orchestration.
//!
//! Every step runs, in order: sensing (seeded noise), guidance, antenna
//! trackers, links and route selection, relay policy, landing machines, then
//! vessel and UAV kinematics. The record for step `k` describes time `k·dt`
//! before the kinematic update.

use thiserror::Error;

use crate::geo::{enu_to_geo, geo_to_enu, horizontal_distance, EnuVector, GeoPoint, GeoPose, Heading};
use crate::guidance::{cross_track_error, LosGuidance};
use crate::landing::{
    led_visible, rf_localize, secure_check, ultrasonic_reading, ChargeEvent, ChargeMachine, LandingStage,
    StageEvidence, StageMachine,
};
use crate::radio::{
    link_budget, los_blocked, select_interface, AntennaPattern, InterfaceConfig, InterfaceKind, LinkEnd,
    LinkEnvironment, LinkSample, ObstacleMap, Pointing, RadioError, RadioNode, Selection,
};
use crate::relay::{hops_have_margin, plan_relay, relay_hops, relay_path, RelayError};
use crate::sim::rng::{self, Noise};
use crate::sim::scenario::{ResolvedNode, Role, Scenario};
use crate::sim::trace::{Trace, TraceMeta, TraceRecord};
use crate::tracker::{pointing_error, step_gimbal, target_pan, GimbalState, HeadingFilter, PeerBelief, TrackerError};
use crate::vessel::{step as vessel_step, Disturbance, DynamicsError, HullParams, VesselState};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Radio(#[from] RadioError),
    #[error(transparent)]
    Relay(#[from] RelayError),
    #[error(transparent)]
    Tracker(#[from] TrackerError),
    #[error("invalid scenario: {0}")]
    Setup(String),
}

/// A run that stopped early; `trace` holds every step completed before the
/// failure.
#[derive(Debug, Clone, PartialEq)]
pub struct SimAbort {
    pub trace: Trace,
    pub time: f64,
    pub error: SimError,
}

impl std::fmt::Display for SimAbort {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "run aborted at t = {} s: {}", self.time, self.error)
    }
}

impl std::error::Error for SimAbort {}

/// Data path chosen for GCS-USV traffic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    Wifi,
    Relay,
    Lte,
    None,
}

impl Route {
    pub fn as_str(self) -> &'static str {
        match self {
            Route::Wifi => "WIFI",
            Route::Relay => "RELAY",
            Route::Lte => "LTE",
            Route::None => "NONE",
        }
    }
}

#[derive(Debug, Clone)]
struct RelayRuntime {
    deployed: bool,
    on_station: bool,
    target: Option<GeoPoint<f64>>,
    infeasible: bool,
}

#[derive(Debug, Clone)]
struct LandingRuntime {
    /// Deck frame, metres.
    uav: [f64; 3],
    stages: StageMachine<f64>,
    charge: Option<ChargeMachine>,
    script: Vec<(ChargeEvent, f64)>,
    script_pos: usize,
    next_event_at: f64,
    last_fix: Option<[f64; 2]>,
    warnings: usize,
}

/// One simulation run.
pub struct Engine {
    scenario: Scenario,
    dt: f64,
    frame: GeoPoint<f64>,
    map: ObstacleMap<f64>,
    gcs: ResolvedNode,
    usv: ResolvedNode,
    uav: Option<ResolvedNode>,
    cell_position: GeoPoint<f64>,
    cell_iface: InterfaceConfig<f64>,
    usv_mast: f64,
    hull: HullParams<f64>,
    disturbance: Disturbance<f64>,
    vessel: VesselState<f64>,
    guidance: LosGuidance<f64>,
    usv_gimbal: GimbalState<f64>,
    gcs_gimbal: GimbalState<f64>,
    usv_filter: HeadingFilter<f64>,
    gcs_filter: HeadingFilter<f64>,
    belief: PeerBelief<f64>,
    report_every: usize,
    replan_every: usize,
    gps: Noise,
    compass_usv: Noise,
    compass_gcs: Noise,
    rssi_wifi: Noise,
    rssi_lte: Noise,
    rssi_relay: Noise,
    rssi_deck: Noise,
    route: Route,
    relay: RelayRuntime,
    landing: Option<LandingRuntime>,
    uav_world: Option<GeoPoint<f64>>,
    step: usize,
}

fn setup<E: ToString>(e: E) -> SimError {
    SimError::Setup(e.to_string())
}

impl Engine {
    pub fn new(scenario: &Scenario) -> Result<Self, SimError> {
        scenario.validate().map_err(setup)?;
        let s = scenario.clone();
        let dt = s.dt;
        let frame = s.origin.with_altitude(0.0);
        let node = |role| -> Result<Option<ResolvedNode>, SimError> {
            s.node(role).map(|n| s.resolve_node(n).map_err(SimError::Setup)).transpose()
        };
        let gcs = node(Role::Gcs)?.ok_or_else(|| setup("no gcs"))?;
        let usv = node(Role::Usv)?.ok_or_else(|| setup("no usv"))?;
        let uav = node(Role::Uav)?;

        let cell_position = s.radio.lte_cell.position.resolve(&s.origin).map_err(SimError::Setup)?;
        let cell_iface = InterfaceConfig {
            tx_power: s.radio.lte_cell.tx_power,
            pattern: AntennaPattern::Omni { gain: s.radio.lte_cell.gain },
            ..InterfaceConfig::default_for(InterfaceKind::Lte)
        };

        let waypoints = s.waypoints_enu().map_err(SimError::Setup)?;
        let params = s.guidance.params(&s.vessel.hull);
        let guidance = LosGuidance::new(waypoints.clone(), params).map_err(setup)?;
        let start = geo_to_enu(&frame, &usv.position).map_err(setup)?;
        let first_leg = (waypoints[1] - waypoints[0]).azimuth().map(|h| h.degrees()).unwrap_or(0.0);
        let mut vessel = VesselState::at_rest(start.flatten(), Heading::new(s.vessel.initial_heading.unwrap_or(first_leg)));
        vessel.surge_velocity = s.vessel.initial_speed;

        let tp = s.tracker;
        // dishes start aligned on each other
        let usv_pose = GeoPose::new(usv.position, vessel.heading);
        let gcs_pose = GeoPose::new(gcs.position, Heading::new(gcs.heading));
        let usv_gimbal = GimbalState::from_params(target_pan(&usv_pose, &gcs.position)?, &tp)?;
        let gcs_gimbal = GimbalState::from_params(target_pan(&gcs_pose, &usv.position)?, &tp)?;

        let seed = s.seed;
        let landing = s.landing.enabled.then(|| {
            let l = &s.landing;
            let mut script = vec![
                (ChargeEvent::TouchdownConfirmed, 0.0),
                (ChargeEvent::MagnetOn, 0.5),
                (ChargeEvent::Centered, 1.0),
                (ChargeEvent::ConnectorIn, 1.0),
                (ChargeEvent::ChargeStarted, 0.5),
                (ChargeEvent::ChargeDone, l.charge_duration),
                (ChargeEvent::ConnectorOut, 1.0),
                (ChargeEvent::TakeoffCleared, 0.5),
            ];
            if l.depart {
                script.push((ChargeEvent::Demagnetized, 0.5));
            }
            LandingRuntime {
                uav: l.start,
                stages: StageMachine::new(l.dwell),
                charge: None,
                script,
                script_pos: 0,
                next_event_at: 0.0,
                last_fix: None,
                warnings: 0,
            }
        });
        let uav_world = match (&uav, s.relay.enabled) {
            (Some(u), true) => Some(u.position),
            _ => None,
        };

        Ok(Self {
            dt,
            frame,
            map: s.obstacle_map(),
            usv_mast: usv.position.altitude,
            hull: s.vessel.hull,
            disturbance: Disturbance {
                drift_velocity: EnuVector::horizontal(s.disturbance.drift_east, s.disturbance.drift_north),
            },
            vessel,
            guidance,
            usv_gimbal,
            gcs_gimbal,
            usv_filter: HeadingFilter::new(tp.heading_filter_gain),
            gcs_filter: HeadingFilter::new(tp.heading_filter_gain),
            belief: PeerBelief::fresh(usv.position),
            report_every: ((1.0 / (tp.report_rate * dt)).round() as usize).max(1),
            replan_every: ((1.0 / dt).round() as usize).max(1),
            gps: Noise::new(seed, rng::GPS, s.sensing.gps_sigma),
            compass_usv: Noise::new(seed, rng::COMPASS_USV, tp.compass_sigma),
            compass_gcs: Noise::new(seed, rng::COMPASS_GCS, tp.compass_sigma),
            rssi_wifi: Noise::new(seed, rng::RSSI_WIFI, s.radio.rssi_noise_sigma),
            rssi_lte: Noise::new(seed, rng::RSSI_LTE, s.radio.rssi_noise_sigma),
            rssi_relay: Noise::new(seed, rng::RSSI_RELAY, s.radio.rssi_noise_sigma),
            rssi_deck: Noise::new(seed, rng::RSSI_DECK, s.landing.rf_noise_sigma),
            route: Route::None,
            relay: RelayRuntime { deployed: false, on_station: false, target: None, infeasible: false },
            landing,
            uav_world,
            step: 0,
            cell_position,
            cell_iface,
            gcs,
            usv,
            uav,
            scenario: s,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn meta(&self) -> TraceMeta {
        TraceMeta { scenario_sha256: self.scenario.digest(), seed: self.scenario.seed }
    }

    pub fn finished(&self) -> bool {
        self.step >= self.scenario.step_count()
    }

    fn env(&self) -> LinkEnvironment<'_, f64> {
        LinkEnvironment {
            obstacles: &self.map,
            path_loss_exponent: self.scenario.radio.path_loss_exponent,
            blockage_penalty: self.scenario.radio.blockage_penalty,
            lte_in_coverage: self.scenario.radio.lte_in_coverage,
        }
    }

    fn usv_antenna(&self) -> Result<GeoPoint<f64>, SimError> {
        let mut p = self.vessel.position;
        p.up = self.usv_mast;
        Ok(enu_to_geo(&self.frame, &p).map_err(RadioError::from)?)
    }

    fn iface(node: &ResolvedNode, kind: InterfaceKind) -> Result<&InterfaceConfig<f64>, SimError> {
        node.interface(kind).ok_or_else(|| SimError::Setup(format!("{} lacks {kind:?}", node.id)))
    }

    fn radio_node(node: &ResolvedNode, position: GeoPoint<f64>) -> RadioNode<f64> {
        RadioNode { id: node.id.clone(), position, interfaces: node.interfaces.clone() }
    }

    /// Advances one step and returns its record.
    pub fn step(&mut self) -> Result<TraceRecord, SimError> {
        let k = self.step;
        let dt = self.dt;
        let t = k as f64 * dt;
        let mut events: Vec<String> = Vec::new();
        let usv_pos = self.usv_antenna()?;

        // sensing
        let mut measured = self.vessel;
        measured.position.east += self.gps.sample();
        measured.position.north += self.gps.sample();
        let compass = Heading::new(self.vessel.heading.degrees() + self.compass_usv.sample());
        measured.heading = self.usv_filter.update(compass, self.vessel.yaw_rate, dt);
        let gcs_compass = Heading::new(self.gcs.heading + self.compass_gcs.sample());
        let gcs_heading_est = self.gcs_filter.update(gcs_compass, 0.0, dt);

        // guidance
        let before = self.guidance.state();
        let out = self.guidance.update(&measured, &self.hull);
        if out.state.active_segment_index != before.active_segment_index {
            events.push(format!("waypoint:{}", out.state.active_segment_index));
        }
        if out.state.finished && !before.finished {
            events.push("route_complete".into());
        }
        let xte = cross_track_error(&self.guidance.active_segment(), &self.vessel.position);

        // trackers
        let usv_true = GeoPose::new(usv_pos, self.vessel.heading);
        let gcs_true = GeoPose::new(self.gcs.position, Heading::new(self.gcs.heading));
        let usv_target = target_pan(&GeoPose::new(usv_pos, measured.heading), &self.gcs.position)?;
        self.usv_gimbal = step_gimbal(&self.usv_gimbal, usv_target, dt)?;
        let gcs_target = target_pan(&GeoPose::new(self.gcs.position, gcs_heading_est), &self.belief.peer_position)?;
        self.gcs_gimbal = step_gimbal(&self.gcs_gimbal, gcs_target, dt)?;
        let usv_pe = pointing_error(&usv_true, &self.usv_gimbal, &self.gcs.position)?;
        let gcs_pe = pointing_error(&gcs_true, &self.gcs_gimbal, &usv_pos)?;

        // links and selection
        let wifi_noise = self.rssi_wifi.sample();
        let lte_noise = self.rssi_lte.sample();
        let relay_noise = if self.relay.deployed { [self.rssi_relay.sample(), self.rssi_relay.sample()] } else { [0.0; 2] };
        let env = self.env();
        let gcs_dish = Self::iface(&self.gcs, InterfaceKind::WifiDirectional)?;
        let usv_dish = Self::iface(&self.usv, InterfaceKind::WifiDirectional)?;
        let usv_lte = Self::iface(&self.usv, InterfaceKind::Lte)?;
        let wifi_budget = link_budget(
            &LinkEnd::new(self.gcs.position, gcs_dish, Pointing::Boresight(Heading::new(self.gcs.heading + self.gcs_gimbal.pan))),
            &LinkEnd::new(usv_pos, usv_dish, Pointing::Boresight(Heading::new(self.vessel.heading.degrees() + self.usv_gimbal.pan))),
            &env,
        )?;
        let wifi = LinkSample::from_rssi(wifi_budget.rssi + wifi_noise, wifi_budget.blocked, usv_dish, env.lte_in_coverage);
        let lte_budget = link_budget(
            &LinkEnd::new(self.cell_position, &self.cell_iface, Pointing::Aligned),
            &LinkEnd::new(usv_pos, usv_lte, Pointing::Aligned),
            &env,
        )?;
        let lte = LinkSample::from_rssi(lte_budget.rssi + lte_noise, lte_budget.blocked, usv_lte, env.lte_in_coverage);

        // once launched the UAV forwards from wherever it currently is
        let relay_path = if self.relay.deployed {
            let hover = self.uav_world.expect("deployed relay has a uav");
            let uav = self.uav.as_ref().expect("relay needs a uav");
            let uav_dish = Self::iface(uav, InterfaceKind::WifiDirectional)?;
            let uav_omni = Self::iface(uav, InterfaceKind::WifiOmni)?;
            let usv_rx = match self.usv.interface(InterfaceKind::WifiOmni) {
                Some(i) => i,
                None => usv_dish,
            };
            // both dishes on the relay hop are held on target
            let up = link_budget(
                &LinkEnd::new(self.gcs.position, gcs_dish, Pointing::Aligned),
                &LinkEnd::new(hover, uav_dish, Pointing::Aligned),
                &env,
            )?;
            let down = link_budget(
                &LinkEnd::new(hover, uav_omni, Pointing::Aligned),
                &LinkEnd::new(usv_pos, usv_rx, Pointing::Aligned),
                &env,
            )?;
            let up = LinkSample::from_rssi(up.rssi + relay_noise[0], up.blocked, uav_dish, true);
            let down = LinkSample::from_rssi(down.rssi + relay_noise[1], down.blocked, usv_rx, true);
            Some(relay_path(up, down, self.scenario.relay.forwarding_delay))
        } else {
            None
        };

        let previous = match self.route {
            Route::Wifi => Selection::Wifi,
            Route::Lte => Selection::Lte,
            Route::Relay | Route::None => Selection::None,
        };
        let base = select_interface(&wifi, &lte, previous, &self.scenario.radio.selection);
        let route = match (base, &relay_path) {
            (Selection::Wifi, _) => Route::Wifi,
            (_, Some(p)) if p.connected => Route::Relay,
            (Selection::Lte, _) => Route::Lte,
            _ => Route::None,
        };
        if route != self.route && k > 0 {
            events.push(format!("route:{}>{}", self.route.as_str(), route.as_str()));
        }
        self.route = route;
        let (throughput, latency) = match route {
            Route::Wifi => (wifi.throughput, wifi.latency),
            Route::Lte => (lte.throughput, lte.latency),
            Route::Relay => {
                let p = relay_path.as_ref().expect("relay route");
                (p.throughput, p.latency)
            }
            Route::None => (0.0, None),
        };

        // position reports to the GCS ride on whatever route is up
        self.belief.age_by(dt);
        if k.is_multiple_of(self.report_every) && route != Route::None {
            let mut reported = measured.position;
            reported.up = self.usv_mast;
            self.belief.report(enu_to_geo(&self.frame, &reported).map_err(RadioError::from)?);
        }

        // relay policy
        if self.scenario.relay.enabled && k.is_multiple_of(self.replan_every) {
            self.update_relay(usv_pos, &mut events)?;
        }
        if let (Some(target), Some(now)) = (self.relay.target, self.uav_world) {
            if !self.relay.on_station && target == now {
                self.relay.on_station = true;
                events.push("relay_on_station".into());
            }
        }

        // landing
        let landing_view = self.update_landing(t, &mut events);

        let uav_enu = match (&self.landing, self.uav_world) {
            (Some(l), _) => Some(self.deck_to_enu(l.uav)),
            (None, Some(p)) => Some(geo_to_enu(&self.frame, &p).map_err(RadioError::from)?),
            _ => None,
        };
        let hover_enu = match self.relay.target {
            Some(p) => Some(geo_to_enu(&self.frame, &p).map_err(RadioError::from)?),
            None => None,
        };

        let record = TraceRecord {
            time: t,
            usv_east: self.vessel.position.east,
            usv_north: self.vessel.position.north,
            usv_latitude: usv_pos.latitude,
            usv_longitude: usv_pos.longitude,
            usv_heading: self.vessel.heading.degrees(),
            usv_surge: self.vessel.surge_velocity,
            cross_track_error: xte,
            active_segment: out.state.active_segment_index,
            guidance_finished: out.state.finished,
            los_blocked: wifi_budget.blocked,
            wifi_rssi: wifi.rssi,
            wifi_blocked: wifi.blocked,
            wifi_connected: wifi.connected,
            wifi_throughput: wifi.throughput,
            wifi_latency: wifi.latency,
            lte_rssi: lte.rssi,
            lte_blocked: lte.blocked,
            lte_connected: lte.connected,
            lte_throughput: lte.throughput,
            lte_latency: lte.latency,
            relay_deployed: self.relay.deployed,
            relay_active: self.relay.on_station,
            relay_hover_east: hover_enu.map(|h| h.east),
            relay_hover_north: hover_enu.map(|h| h.north),
            relay_hover_up: hover_enu.map(|h| h.up),
            relay_up_rssi: relay_path.map(|p| p.gcs_uav.rssi),
            relay_up_blocked: relay_path.map(|p| p.gcs_uav.blocked),
            relay_down_rssi: relay_path.map(|p| p.uav_usv.rssi),
            relay_down_blocked: relay_path.map(|p| p.uav_usv.blocked),
            relay_up_throughput: relay_path.map(|p| p.gcs_uav.throughput),
            relay_down_throughput: relay_path.map(|p| p.uav_usv.throughput),
            relay_throughput: relay_path.map(|p| p.throughput),
            relay_latency: relay_path.and_then(|p| p.latency),
            selected: route.as_str().into(),
            throughput,
            latency,
            gcs_pan: self.gcs_gimbal.pan,
            usv_pan: self.usv_gimbal.pan,
            gcs_pointing_error: gcs_pe,
            usv_pointing_error: usv_pe,
            gcs_belief_age: self.belief.age,
            uav_east: uav_enu.map(|p| p.east),
            uav_north: uav_enu.map(|p| p.north),
            uav_up: uav_enu.map(|p| p.up),
            landing_stage: landing_view.map(|v| v.0.as_str().to_string()),
            charge_state: landing_view.and_then(|v| v.1).map(|c| c.state.as_str().to_string()),
            motors_on: landing_view.and_then(|v| v.1).map(|c| c.motors_on),
            magnet_engaged: landing_view.and_then(|v| v.1).map(|c| c.magnet_engaged),
            events: events.join(";"),
        };

        // kinematics
        self.vessel = vessel_step(&self.vessel, &out.command, &self.disturbance, &self.hull, dt)?;
        self.move_landing_uav();
        self.move_relay_uav()?;
        self.step += 1;
        Ok(record)
    }

    fn update_relay(&mut self, usv_pos: GeoPoint<f64>, events: &mut Vec<String>) -> Result<(), SimError> {
        if !los_blocked(&self.gcs.position, &usv_pos, &self.map).map_err(RadioError::from)? {
            return Ok(());
        }
        let uav = self.uav.as_ref().expect("relay needs a uav");
        let env = self.env();
        let gcs = Self::radio_node(&self.gcs, self.gcs.position);
        let usv = Self::radio_node(&self.usv, usv_pos);
        let uav_node = Self::radio_node(uav, self.uav_world.unwrap_or(uav.position));
        let policy = &self.scenario.relay;
        if let Some(h) = self.relay.target {
            // keep station while the hover still sees both ends with margin
            let clear = !los_blocked(&self.gcs.position, &h, &self.map).map_err(RadioError::from)?
                && !los_blocked(&h, &usv_pos, &self.map).map_err(RadioError::from)?;
            let path = relay_hops(&gcs, &usv, &uav_node, &h, &env, policy)?;
            let up_floor = Self::iface(uav, InterfaceKind::WifiDirectional)?.rssi_floor;
            let down_floor = self.usv.interface(InterfaceKind::WifiOmni).map_or(
                Self::iface(&self.usv, InterfaceKind::WifiDirectional)?.rssi_floor,
                |i| i.rssi_floor,
            );
            if clear && hops_have_margin(&path, up_floor, down_floor, policy) {
                return Ok(());
            }
        }
        match plan_relay(&gcs, &usv, &uav_node, &env, policy) {
            Ok(plan) if plan.deploy => {
                let hover = plan.hover_position.expect("deployed plan has a hover point");
                if let Some(current) = self.relay.target {
                    // nothing better than where we already are
                    if horizontal_distance(&current, &hover).map_err(RadioError::from)? < 1.0
                        && (current.altitude - hover.altitude).abs() < 1.0
                    {
                        return Ok(());
                    }
                }
                let verb = if self.relay.deployed { "relay_moved" } else { "relay_deployed" };
                self.relay = RelayRuntime { deployed: true, on_station: false, target: Some(hover), infeasible: false };
                events.push(format!("{verb}:alt={}:expected={}", hover.altitude, plan.expected_end_to_end_throughput));
            }
            Ok(_) => {}
            Err(RelayError::Infeasible) => {
                if !self.relay.infeasible {
                    events.push("relay_infeasible".into());
                }
                self.relay.infeasible = true;
            }
            Err(e) => return Err(e.into()),
        }
        Ok(())
    }

    fn deck_to_enu(&self, p: [f64; 3]) -> EnuVector<f64> {
        let (s, c) = self.vessel.heading.radians().sin_cos();
        EnuVector::new(
            self.vessel.position.east + p[0] * s + p[1] * c,
            self.vessel.position.north + p[0] * c - p[1] * s,
            p[2],
        )
    }

    /// Runs sensing, the stage machine and the charging script. Returns the
    /// stage and charge machine for the record.
    fn update_landing(&mut self, t: f64, events: &mut Vec<String>) -> Option<(LandingStage, Option<ChargeMachine>)> {
        let cfg = &self.scenario.landing;
        let l = self.landing.as_mut()?;
        let deck = &cfg.deck;
        let c = deck.platform_center;
        let rel = [l.uav[0] - c[0], l.uav[1] - c[1], l.uav[2] - c[2]];
        let range = (rel[0] * rel[0] + rel[1] * rel[1] + rel[2] * rel[2]).sqrt();

        let mut rf_fix = false;
        if range <= cfg.rf_range {
            let readings: Vec<Option<f64>> = deck
                .rf_antennas
                .iter()
                .map(|a| {
                    let d = ((l.uav[0] - a[0]).powi(2) + (l.uav[1] - a[1]).powi(2) + (l.uav[2] - a[2]).powi(2)).sqrt();
                    Some(cfg.rf_model.rssi_at(d) + self.rssi_deck.sample())
                })
                .collect();
            if let Ok(fix) = rf_localize(&readings, &deck.rf_antennas, l.uav[2], &cfg.rf_model) {
                rf_fix = true;
                l.last_fix = Some(fix.position);
            }
        }
        let lamps = led_visible(l.uav, &deck.lamps, cfg.visibility, cfg.camera_fov_half_angle).len() >= 2;
        let ultrasonic = ultrasonic_reading(l.uav[2] - c[2], cfg.ultrasonic_max_range).is_some();
        let touchdown = l.uav[2] - c[2] <= cfg.touchdown_height;
        let magnet = crate::landing::Magnet {
            holding_force: cfg.magnet.holding_force,
            engaged: l.charge.is_some_and(|m| m.magnet_engaged),
        };
        let secured = secure_check(cfg.disturbance_force, &magnet);
        let evidence = StageEvidence { rf_fix, lamps, ultrasonic, touchdown, secured };

        let departed = l.charge.is_some_and(|m| m.state == crate::landing::ChargeState::Departed);
        if !departed {
            if let Some(prev) = l.stages.step(&evidence, self.dt) {
                events.push(format!("stage:{}>{}", prev.as_str(), l.stages.stage.as_str()));
            }
        }

        if l.charge.is_none() && l.stages.stage == LandingStage::Touchdown {
            l.charge = Some(ChargeMachine::new());
            l.next_event_at = t;
        }
        if let Some(m) = l.charge.as_mut() {
            if l.script_pos < l.script.len() && t + 1e-9 >= l.next_event_at {
                let event = l.script[l.script_pos].0;
                match m.step(Some(event)) {
                    Ok(None) => events.push(format!("charge:{event:?}>{}", m.state.as_str())),
                    Ok(Some(w)) => {
                        l.warnings += 1;
                        events.push(format!("warning:{w}"));
                    }
                    Err(e) => {
                        l.warnings += 1;
                        events.push(format!("error:{e}"));
                    }
                }
                l.script_pos += 1;
                if let Some(&(_, delay)) = l.script.get(l.script_pos) {
                    l.next_event_at = t + delay;
                }
            }
        }
        Some((l.stages.stage, l.charge))
    }

    fn move_landing_uav(&mut self) {
        let cfg = &self.scenario.landing;
        let dt = self.dt;
        let Some(l) = self.landing.as_mut() else { return };
        let c = cfg.deck.platform_center;
        let truth = [l.uav[0] - c[0], l.uav[1] - c[1]];
        let departed = l.charge.is_some_and(|m| m.state == crate::landing::ChargeState::Departed);
        let (estimate, speed, altitude, rate) = match l.stages.stage {
            _ if departed => (truth, 0.0, cfg.cruise_altitude, cfg.descent_rate),
            LandingStage::Transit => (truth, cfg.transit_speed, cfg.cruise_altitude, cfg.descent_rate),
            LandingStage::RfApproach => {
                let est = l.last_fix.map_or(truth, |f| [f[0] - c[0], f[1] - c[1]]);
                (est, cfg.approach_speed, cfg.approach_altitude, cfg.descent_rate)
            }
            LandingStage::VisualAlign => {
                let alt = if truth[0].hypot(truth[1]) < 1.0 { cfg.align_altitude } else { cfg.approach_altitude };
                (truth, cfg.align_speed, alt, cfg.descent_rate)
            }
            LandingStage::FinalDescent => {
                let alt = if truth[0].hypot(truth[1]) < 0.3 { c[2] } else { l.uav[2] };
                (truth, cfg.align_speed, alt, cfg.final_descent_rate)
            }
            LandingStage::Touchdown | LandingStage::Secured => (truth, 0.0, c[2], cfg.final_descent_rate),
        };
        let off = estimate[0].hypot(estimate[1]);
        if off > 0.0 && speed > 0.0 {
            let step = (speed * dt).min(off);
            l.uav[0] -= estimate[0] / off * step;
            l.uav[1] -= estimate[1] / off * step;
        }
        let dz = altitude - l.uav[2];
        l.uav[2] += dz.signum() * (rate * dt).min(dz.abs());
        l.uav[2] = l.uav[2].max(c[2]);
    }

    /// Straight-line flight toward the hover point at the transit speed.
    fn move_relay_uav(&mut self) -> Result<(), SimError> {
        let (Some(target), Some(now)) = (self.relay.target, self.uav_world) else {
            return Ok(());
        };
        if target == now {
            return Ok(());
        }
        let a = geo_to_enu(&self.frame, &now).map_err(RadioError::from)?;
        let b = geo_to_enu(&self.frame, &target).map_err(RadioError::from)?;
        let gap = b - a;
        let reach = self.scenario.relay.transit_speed * self.dt;
        self.uav_world = Some(if gap.norm() <= reach {
            target
        } else {
            enu_to_geo(&self.frame, &(a + gap * (reach / gap.norm()))).map_err(RadioError::from)?
        });
        Ok(())
    }

    /// Protocol warnings raised by the charging machine so far.
    pub fn landing_warnings(&self) -> usize {
        self.landing.as_ref().map_or(0, |l| l.warnings)
    }
}

/// Runs `scenario` to completion.
pub fn run(scenario: &Scenario) -> Result<Trace, SimAbort> {
    let mut engine = match Engine::new(scenario) {
        Ok(e) => e,
        Err(error) => {
            let meta = TraceMeta { scenario_sha256: scenario.digest(), seed: scenario.seed };
            return Err(SimAbort { trace: Trace { meta, records: vec![] }, time: 0.0, error });
        }
    };
    let mut trace = Trace { meta: engine.meta(), records: Vec::with_capacity(scenario.step_count()) };
    while !engine.finished() {
        match engine.step() {
            Ok(r) => trace.records.push(r),
            Err(error) => {
                let time = engine.step as f64 * engine.dt;
                return Err(SimAbort { trace, time, error });
            }
        }
    }
    Ok(trace)
}
