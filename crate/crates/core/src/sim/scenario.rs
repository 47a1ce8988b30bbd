//! Scenario files: strict TOML schema, defaults and validation.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::geo::{enu_to_geo, geo_to_enu, EnuVector, GeoPoint};
use crate::guidance::{LosGuidance, LosParams};
use crate::landing::{DeckSensorSuite, Magnet, RfRangingModel};
use crate::radio::{AntennaPattern, InterfaceConfig, InterfaceKind, Obstacle, ObstacleMap, SelectionPolicy};
use crate::relay::RelayPolicy;
use crate::tracker::TrackerParams;
use crate::vessel::HullParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Parse,
    Schema,
    Invariant,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioError {
    pub kind: ErrorKind,
    /// Dotted key path, e.g. `nodes[1].id`.
    pub path: Option<String>,
    /// 1-based line in the scenario file.
    pub line: Option<usize>,
    pub message: String,
}

impl ScenarioError {
    fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self { kind: ErrorKind::Schema, path: Some(path.into()), line: None, message: message.into() }
    }

    fn invariant(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self { kind: ErrorKind::Invariant, path: Some(path.into()), line: None, message: message.into() }
    }
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            ErrorKind::Parse => "parse error",
            ErrorKind::Schema => "schema violation",
            ErrorKind::Invariant => "invariant violation",
        };
        write!(f, "{kind}")?;
        if let Some(p) = &self.path {
            write!(f, " at `{p}`")?;
        }
        if let Some(l) = self.line {
            write!(f, " (line {l})")?;
        }
        write!(f, ": {}", self.message)
    }
}

impl std::error::Error for ScenarioError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Gcs,
    Usv,
    Uav,
}

/// A point given either in the scenario's local east/north/up frame or as
/// latitude/longitude/altitude.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Position {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub east: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub north: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub up: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub longitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub altitude: Option<f64>,
}

impl Position {
    pub fn enu(east: f64, north: f64, up: f64) -> Self {
        Self { east: Some(east), north: Some(north), up: Some(up), ..Self::default() }
    }

    /// Resolves against the scenario origin.
    pub fn resolve(&self, origin: &GeoPoint<f64>) -> Result<GeoPoint<f64>, String> {
        let local = self.east.is_some() || self.north.is_some() || self.up.is_some();
        let geodetic = self.latitude.is_some() || self.longitude.is_some() || self.altitude.is_some();
        match (local, geodetic) {
            (true, true) => Err("mixes east/north/up with latitude/longitude/altitude".into()),
            (true, false) => {
                let (Some(e), Some(n)) = (self.east, self.north) else {
                    return Err("needs both east and north".into());
                };
                let offset = EnuVector::new(e, n, self.up.unwrap_or(0.0));
                if !offset.is_finite() {
                    return Err("non-finite coordinate".into());
                }
                enu_to_geo(&origin.with_altitude(0.0), &offset).map_err(|e| e.to_string())
            }
            (false, true) => {
                let (Some(lat), Some(lon)) = (self.latitude, self.longitude) else {
                    return Err("needs both latitude and longitude".into());
                };
                GeoPoint::new(lat, lon, self.altitude.unwrap_or(0.0)).map_err(|e| e.to_string())
            }
            (false, false) => Err("empty position".into()),
        }
    }
}

/// Interface declaration: a kind plus optional overrides of its defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterfaceSpec {
    pub kind: InterfaceKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tx_power: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pattern: Option<AntennaPattern<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rssi_floor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_throughput: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_latency: Option<f64>,
}

impl InterfaceSpec {
    pub fn of(kind: InterfaceKind) -> Self {
        Self {
            kind,
            tx_power: None,
            frequency: None,
            pattern: None,
            rssi_floor: None,
            max_throughput: None,
            base_latency: None,
        }
    }

    pub fn resolve(&self) -> InterfaceConfig<f64> {
        let d = InterfaceConfig::default_for(self.kind);
        InterfaceConfig {
            kind: self.kind,
            tx_power: self.tx_power.unwrap_or(d.tx_power),
            frequency: self.frequency.unwrap_or(d.frequency),
            pattern: self.pattern.unwrap_or(d.pattern),
            rssi_floor: self.rssi_floor.unwrap_or(d.rssi_floor),
            max_throughput: self.max_throughput.unwrap_or(d.max_throughput),
            base_latency: self.base_latency.unwrap_or(d.base_latency),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    pub id: String,
    pub role: Role,
    /// Antenna position; for the USV this is the start point, with the mast
    /// height as altitude. A landing UAV starts at `landing.start` instead.
    pub position: Position,
    /// Fixed heading of a GCS, degrees.
    #[serde(default)]
    pub heading: f64,
    /// Defaults by role: GCS dish + LTE, USV dish + omni + LTE, UAV dish
    /// (with the relay gain offset) + omni.
    #[serde(default)]
    pub interfaces: Vec<InterfaceSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VesselSpec {
    pub hull: HullParams<f64>,
    /// Degrees; defaults to the azimuth of the first leg.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_heading: Option<f64>,
    /// m/s
    pub initial_speed: f64,
}

impl Default for VesselSpec {
    fn default() -> Self {
        Self { hull: HullParams::default(), initial_heading: None, initial_speed: 0.0 }
    }
}

/// LOS settings; unset gains fall back to the hull-derived defaults.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GuidanceSpec {
    pub waypoints: Vec<Position>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lookahead: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub acceptance_radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cruise_speed: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub heading_kp: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub heading_kd: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub speed_kp: Option<f64>,
}

impl GuidanceSpec {
    pub fn params(&self, hull: &HullParams<f64>) -> LosParams<f64> {
        let d = LosParams::for_hull(hull);
        let lookahead = self.lookahead.unwrap_or(d.lookahead);
        LosParams {
            lookahead,
            acceptance_radius: self.acceptance_radius.unwrap_or(lookahead),
            cruise_speed: self.cruise_speed.unwrap_or(d.cruise_speed),
            heading_kp: self.heading_kp.unwrap_or(d.heading_kp),
            heading_kd: self.heading_kd.unwrap_or(d.heading_kd),
            speed_kp: self.speed_kp.unwrap_or(d.speed_kp),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DisturbanceSpec {
    /// Constant surface drift, m/s.
    pub drift_east: f64,
    pub drift_north: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LteCellSpec {
    pub position: Position,
    /// dBm
    pub tx_power: f64,
    /// dBi
    pub gain: f64,
}

impl Default for LteCellSpec {
    fn default() -> Self {
        Self { position: Position::enu(0.0, 0.0, 30.0), tx_power: 43.0, gain: 15.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadioSpec {
    pub path_loss_exponent: f64,
    /// dB
    pub blockage_penalty: f64,
    pub lte_in_coverage: bool,
    /// Standard deviation of per-sample RSSI noise, dB.
    pub rssi_noise_sigma: f64,
    pub lte_cell: LteCellSpec,
    pub selection: SelectionPolicy<f64>,
}

impl Default for RadioSpec {
    fn default() -> Self {
        Self {
            path_loss_exponent: 2.0,
            blockage_penalty: 40.0,
            lte_in_coverage: true,
            rssi_noise_sigma: 2.0,
            lte_cell: LteCellSpec::default(),
            selection: SelectionPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensingSpec {
    /// GPS horizontal noise per axis, metres.
    pub gps_sigma: f64,
}

impl Default for SensingSpec {
    fn default() -> Self {
        Self { gps_sigma: 0.2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LandingSpec {
    pub enabled: bool,
    /// UAV start in the deck frame (x forward, y starboard, z up), metres.
    pub start: [f64; 3],
    pub cruise_altitude: f64,
    pub approach_altitude: f64,
    pub align_altitude: f64,
    /// Horizontal speed limits per stage, m/s.
    pub transit_speed: f64,
    pub approach_speed: f64,
    pub align_speed: f64,
    /// m/s
    pub descent_rate: f64,
    pub final_descent_rate: f64,
    /// Deck RF antennas are heard within this range, metres.
    pub rf_range: f64,
    /// dB
    pub rf_noise_sigma: f64,
    pub rf_model: RfRangingModel<f64>,
    /// Lamp visibility, metres.
    pub visibility: f64,
    /// Degrees.
    pub camera_fov_half_angle: f64,
    pub ultrasonic_max_range: f64,
    /// Seconds of lost evidence before falling back a stage.
    pub dwell: f64,
    /// Height at which the inductive gear sensors trigger, metres.
    pub touchdown_height: f64,
    pub deck: DeckSensorSuite<f64>,
    pub magnet: Magnet<f64>,
    /// Deck-plane disturbance force on the landed UAV, N.
    pub disturbance_force: f64,
    /// Seconds.
    pub charge_duration: f64,
    /// Demagnetize and leave once cleared for takeoff.
    pub depart: bool,
}

impl Default for LandingSpec {
    fn default() -> Self {
        Self {
            enabled: false,
            start: [-120.0, 40.0, 25.0],
            cruise_altitude: 25.0,
            approach_altitude: 10.0,
            align_altitude: 4.0,
            transit_speed: 8.0,
            approach_speed: 2.0,
            align_speed: 0.8,
            descent_rate: 1.0,
            final_descent_rate: 0.4,
            rf_range: 60.0,
            rf_noise_sigma: 0.5,
            rf_model: RfRangingModel { max_residual: 3.0, ..RfRangingModel::default() },
            visibility: 30.0,
            camera_fov_half_angle: 40.0,
            ultrasonic_max_range: 6.0,
            dwell: 2.0,
            touchdown_height: 0.05,
            deck: DeckSensorSuite::default(),
            magnet: Magnet::default(),
            disturbance_force: 120.0,
            charge_duration: 20.0,
            depart: false,
        }
    }
}

fn default_dt() -> f64 {
    0.1
}

fn default_origin() -> GeoPoint<f64> {
    GeoPoint { latitude: 61.45, longitude: 23.85, altitude: 0.0 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    pub duration: f64,
    /// Anchor of the local east/north/up frame.
    #[serde(default = "default_origin")]
    pub origin: GeoPoint<f64>,
    pub nodes: Vec<NodeSpec>,
    #[serde(default)]
    pub vessel: VesselSpec,
    #[serde(default)]
    pub guidance: GuidanceSpec,
    #[serde(default)]
    pub disturbance: DisturbanceSpec,
    #[serde(default)]
    pub radio: RadioSpec,
    #[serde(default)]
    pub tracker: TrackerParams<f64>,
    #[serde(default)]
    pub relay: RelayPolicy<f64>,
    #[serde(default)]
    pub landing: LandingSpec,
    #[serde(default)]
    pub sensing: SensingSpec,
    #[serde(default)]
    pub obstacles: Vec<Obstacle<f64>>,
}

/// A node with positions and interfaces resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedNode {
    pub id: String,
    pub role: Role,
    pub position: GeoPoint<f64>,
    pub heading: f64,
    pub interfaces: Vec<InterfaceConfig<f64>>,
}

impl ResolvedNode {
    pub fn interface(&self, kind: InterfaceKind) -> Option<&InterfaceConfig<f64>> {
        self.interfaces.iter().find(|i| i.kind == kind)
    }
}

impl Scenario {
    /// Reads, parses and validates a scenario file.
    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|e| ScenarioError {
            kind: ErrorKind::Parse,
            path: None,
            line: None,
            message: format!("{}: {e}", path.display()),
        })?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        let doc = toml::de::DeTable::parse(text).map_err(|e| ScenarioError {
            kind: ErrorKind::Parse,
            path: None,
            line: e.span().map(|s| line_of(text, s.start)),
            message: e.message().to_string(),
        })?;
        let de = toml::Deserializer::parse(text).map_err(|e| ScenarioError {
            kind: ErrorKind::Parse,
            path: None,
            line: e.span().map(|s| line_of(text, s.start)),
            message: e.message().to_string(),
        })?;
        let scenario: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            ScenarioError {
                kind: ErrorKind::Schema,
                line: inner.span().map(|s| line_of(text, s.start)),
                path: (path != ".").then_some(path),
                message: inner.message().to_string(),
            }
        })?;
        scenario.validate().map_err(|mut err| {
            if err.line.is_none() {
                err.line = err.path.as_deref().and_then(|p| line_of_path(text, doc.get_ref(), p));
            }
            err
        })?;
        Ok(scenario)
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("scenario serializes");
        hex::encode(Sha256::digest(bytes))
    }

    pub fn step_count(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }

    pub fn obstacle_map(&self) -> ObstacleMap<f64> {
        ObstacleMap { origin: self.origin.with_altitude(0.0), obstacles: self.obstacles.clone() }
    }

    pub fn node(&self, role: Role) -> Option<&NodeSpec> {
        self.nodes.iter().find(|n| n.role == role)
    }

    pub fn resolve_node(&self, node: &NodeSpec) -> Result<ResolvedNode, String> {
        let position = node.position.resolve(&self.origin)?;
        let mut specs = node.interfaces.clone();
        if specs.is_empty() {
            specs = match node.role {
                Role::Gcs => vec![InterfaceSpec::of(InterfaceKind::WifiDirectional), InterfaceSpec::of(InterfaceKind::Lte)],
                Role::Usv => vec![
                    InterfaceSpec::of(InterfaceKind::WifiDirectional),
                    InterfaceSpec::of(InterfaceKind::WifiOmni),
                    InterfaceSpec::of(InterfaceKind::Lte),
                ],
                Role::Uav => vec![InterfaceSpec::of(InterfaceKind::WifiDirectional), InterfaceSpec::of(InterfaceKind::WifiOmni)],
            };
        }
        let mut interfaces: Vec<_> = specs.iter().map(InterfaceSpec::resolve).collect();
        if node.role == Role::Uav && node.interfaces.is_empty() {
            for i in interfaces.iter_mut().filter(|i| i.kind == InterfaceKind::WifiDirectional) {
                *i = self.relay.uav_directional(i);
            }
        }
        Ok(ResolvedNode { id: node.id.clone(), role: node.role, position, heading: node.heading, interfaces })
    }

    pub fn waypoints_enu(&self) -> Result<Vec<EnuVector<f64>>, String> {
        let frame = self.origin.with_altitude(0.0);
        self.guidance
            .waypoints
            .iter()
            .map(|w| {
                let g = w.resolve(&self.origin)?;
                geo_to_enu(&frame, &g).map(EnuVector::flatten).map_err(|e| e.to_string())
            })
            .collect()
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let finite_pos = |path: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(ScenarioError::schema(path, format!("must be a finite positive number, got {v}")))
            }
        };
        if !(self.dt > 0.0 && self.dt <= 1.0) {
            return Err(ScenarioError::schema("dt", format!("must be in (0, 1], got {}", self.dt)));
        }
        finite_pos("duration", self.duration)?;
        if self.step_count() == 0 {
            return Err(ScenarioError::schema("duration", "shorter than one step"));
        }
        self.origin.validate().map_err(|e| ScenarioError::schema("origin", e.to_string()))?;

        let mut ids = HashSet::new();
        for (i, n) in self.nodes.iter().enumerate() {
            if n.id.is_empty() {
                return Err(ScenarioError::schema(format!("nodes[{i}].id"), "empty id"));
            }
            if !ids.insert(n.id.as_str()) {
                return Err(ScenarioError::invariant(format!("nodes[{i}].id"), format!("duplicate node id `{}`", n.id)));
            }
            let resolved = self
                .resolve_node(n)
                .map_err(|m| ScenarioError::schema(format!("nodes[{i}].position"), m))?;
            for (k, iface) in resolved.interfaces.iter().enumerate() {
                iface
                    .validate()
                    .map_err(|f| ScenarioError::schema(format!("nodes[{i}].interfaces[{k}].{f}"), "invalid value"))?;
            }
            let mut kinds: Vec<_> = resolved.interfaces.iter().map(|i| i.kind as u8).collect();
            kinds.sort();
            kinds.dedup();
            if kinds.len() != resolved.interfaces.len() {
                return Err(ScenarioError::invariant(format!("nodes[{i}].interfaces"), "interface kinds must be distinct"));
            }
            if !n.heading.is_finite() {
                return Err(ScenarioError::schema(format!("nodes[{i}].heading"), "non-finite"));
            }
        }
        let count = |r: Role| self.nodes.iter().filter(|n| n.role == r).count();
        if count(Role::Gcs) != 1 {
            return Err(ScenarioError::invariant("nodes", "exactly one node with role `gcs` is required"));
        }
        if count(Role::Usv) != 1 {
            return Err(ScenarioError::invariant("nodes", "exactly one node with role `usv` is required"));
        }
        if count(Role::Uav) > 1 {
            return Err(ScenarioError::invariant("nodes", "at most one node with role `uav` is supported"));
        }
        let need = |role: Role, kind: InterfaceKind| -> Result<(), ScenarioError> {
            let (i, n) = self.nodes.iter().enumerate().find(|(_, n)| n.role == role).expect("counted");
            let r = self.resolve_node(n).expect("resolved above");
            if r.interface(kind).is_none() {
                return Err(ScenarioError::invariant(
                    format!("nodes[{i}].interfaces"),
                    format!("{role:?} node needs a {kind:?} interface"),
                ));
            }
            Ok(())
        };
        need(Role::Gcs, InterfaceKind::WifiDirectional)?;
        need(Role::Usv, InterfaceKind::WifiDirectional)?;
        need(Role::Usv, InterfaceKind::Lte)?;

        self.vessel.hull.validate().map_err(|e| ScenarioError::schema("vessel.hull", e.to_string()))?;
        if let Some(h) = self.vessel.initial_heading {
            if !h.is_finite() {
                return Err(ScenarioError::schema("vessel.initial_heading", "non-finite"));
            }
        }
        if !self.vessel.initial_speed.is_finite() {
            return Err(ScenarioError::schema("vessel.initial_speed", "non-finite"));
        }
        let waypoints = self.waypoints_enu().map_err(|m| ScenarioError::schema("guidance.waypoints", m))?;
        LosGuidance::new(waypoints, self.guidance.params(&self.vessel.hull))
            .map_err(|e| ScenarioError::schema("guidance", e.to_string()))?;
        if !(self.disturbance.drift_east.is_finite() && self.disturbance.drift_north.is_finite()) {
            return Err(ScenarioError::schema("disturbance", "non-finite drift"));
        }

        let r = &self.radio;
        finite_pos("radio.path_loss_exponent", r.path_loss_exponent)?;
        if !(r.blockage_penalty.is_finite() && r.blockage_penalty >= 0.0) {
            return Err(ScenarioError::schema("radio.blockage_penalty", "must be finite and non-negative"));
        }
        if !(r.rssi_noise_sigma.is_finite() && r.rssi_noise_sigma >= 0.0) {
            return Err(ScenarioError::schema("radio.rssi_noise_sigma", "must be finite and non-negative"));
        }
        r.lte_cell
            .position
            .resolve(&self.origin)
            .map_err(|m| ScenarioError::schema("radio.lte_cell.position", m))?;
        if !(r.lte_cell.tx_power.is_finite() && r.lte_cell.gain.is_finite()) {
            return Err(ScenarioError::schema("radio.lte_cell", "non-finite power or gain"));
        }
        r.selection.validate().map_err(|f| ScenarioError::schema(format!("radio.selection.{f}"), "invalid value"))?;
        self.tracker.validate().map_err(|f| ScenarioError::schema(format!("tracker.{f}"), "invalid value"))?;
        if self.tracker.quantization > 0.0 && self.tracker.max_rate * self.dt < self.tracker.quantization {
            return Err(ScenarioError::invariant(
                "tracker.max_rate",
                "max_rate·dt is below one drive step; the gimbal could never move",
            ));
        }
        self.relay.validate().map_err(|e| ScenarioError::schema("relay", e.to_string()))?;
        if !(self.sensing.gps_sigma.is_finite() && self.sensing.gps_sigma >= 0.0) {
            return Err(ScenarioError::schema("sensing.gps_sigma", "must be finite and non-negative"));
        }
        for (i, o) in self.obstacles.iter().enumerate() {
            let single = ObstacleMap { origin: self.origin, obstacles: vec![o.clone()] };
            single
                .validate()
                .map_err(|e| ScenarioError::schema(format!("obstacles[{i}]"), e.to_string().replace("obstacle 0: ", "")))?;
        }

        let has_uav = count(Role::Uav) == 1;
        if self.relay.enabled && !has_uav {
            return Err(ScenarioError::invariant("relay.enabled", "relay needs a node with role `uav`"));
        }
        if self.landing.enabled {
            if !has_uav {
                return Err(ScenarioError::invariant("landing.enabled", "landing needs a node with role `uav`"));
            }
            if self.relay.enabled {
                return Err(ScenarioError::invariant("landing.enabled", "the UAV cannot relay and land in one run"));
            }
            self.validate_landing()?;
        }
        if self.relay.enabled {
            let (i, n) = self.nodes.iter().enumerate().find(|(_, n)| n.role == Role::Uav).expect("has uav");
            let r = self.resolve_node(n).expect("resolved above");
            for kind in [InterfaceKind::WifiDirectional, InterfaceKind::WifiOmni] {
                if r.interface(kind).is_none() {
                    return Err(ScenarioError::invariant(
                        format!("nodes[{i}].interfaces"),
                        format!("relay UAV needs a {kind:?} interface"),
                    ));
                }
            }
        }
        Ok(())
    }

    fn validate_landing(&self) -> Result<(), ScenarioError> {
        let l = &self.landing;
        for (name, v) in [
            ("cruise_altitude", l.cruise_altitude),
            ("approach_altitude", l.approach_altitude),
            ("align_altitude", l.align_altitude),
            ("transit_speed", l.transit_speed),
            ("approach_speed", l.approach_speed),
            ("align_speed", l.align_speed),
            ("descent_rate", l.descent_rate),
            ("final_descent_rate", l.final_descent_rate),
            ("rf_range", l.rf_range),
            ("visibility", l.visibility),
            ("ultrasonic_max_range", l.ultrasonic_max_range),
            ("dwell", l.dwell),
            ("touchdown_height", l.touchdown_height),
            ("charge_duration", l.charge_duration),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(ScenarioError::schema(format!("landing.{name}"), format!("must be a finite positive number, got {v}")));
            }
        }
        if !(l.camera_fov_half_angle > 0.0 && l.camera_fov_half_angle < 90.0) {
            return Err(ScenarioError::schema("landing.camera_fov_half_angle", "must be in (0, 90)"));
        }
        if !(l.rf_noise_sigma.is_finite() && l.rf_noise_sigma >= 0.0) {
            return Err(ScenarioError::schema("landing.rf_noise_sigma", "must be finite and non-negative"));
        }
        if !(l.disturbance_force.is_finite() && l.disturbance_force >= 0.0) {
            return Err(ScenarioError::schema("landing.disturbance_force", "must be finite and non-negative"));
        }
        if !(l.magnet.holding_force.is_finite() && l.magnet.holding_force > 0.0) {
            return Err(ScenarioError::schema("landing.magnet.holding_force", "must be positive"));
        }
        if !l.start.iter().all(|v| v.is_finite()) || l.start[2] <= 0.0 {
            return Err(ScenarioError::schema("landing.start", "must be finite with positive height"));
        }
        l.deck.validate().map_err(|f| ScenarioError::schema(format!("landing.deck.{f}"), "invalid deck layout"))?;
        if l.align_altitude >= l.ultrasonic_max_range {
            // FINAL_DESCENT is gated on the altimeter, so alignment must end inside its range
            return Err(ScenarioError::invariant("landing.align_altitude", "must be below ultrasonic_max_range"));
        }
        Ok(())
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

/// Line of the value at `path` (`a.b[2].c`), or of the deepest existing
/// ancestor.
fn line_of_path(text: &str, root: &toml::de::DeTable<'_>, path: &str) -> Option<usize> {
    use toml::de::DeValue;
    let mut span = None;
    let mut table = Some(root);
    'outer: for part in path.split('.') {
        let (key, indices) = match part.find('[') {
            Some(i) => (&part[..i], &part[i..]),
            None => (part, ""),
        };
        let Some(entry) = table.and_then(|t| t.iter().find(|(k, _)| k.get_ref() == key)).map(|(_, v)| v) else {
            break;
        };
        span = Some(entry.span());
        let mut value: &DeValue<'_> = entry.get_ref();
        for idx in indices.split(']').filter(|s| !s.is_empty()) {
            let item = idx.trim_start_matches('[').parse::<usize>().ok().and_then(|i| value.as_array()?.get(i));
            let Some(item) = item else { break 'outer };
            span = Some(item.span());
            value = item.get_ref();
        }
        table = value.as_table();
    }
    span.map(|s| line_of(text, s.start))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
duration = 10.0

[[nodes]]
id = "gcs"
role = "gcs"
position = { east = 0.0, north = 0.0, up = 5.0 }

[[nodes]]
id = "usv"
role = "usv"
position = { east = 100.0, north = 0.0, up = 3.0 }

[guidance]
waypoints = [{ east = 100.0, north = 0.0 }, { east = 100.0, north = 500.0 }]
"#;

    #[test]
    fn minimal_file_gets_defaults() {
        let s = Scenario::from_toml(MINIMAL).unwrap();
        assert_eq!(s.dt, 0.1);
        assert_eq!(s.seed, 0);
        assert_eq!(s.radio.blockage_penalty, 40.0);
        assert_eq!(s.radio.selection.hysteresis, 6.0);
        assert_eq!(s.tracker.max_rate, 30.0);
        assert_eq!(s.relay.max_altitude, 150.0);
        assert_eq!(s.landing.magnet.holding_force, 300.0);
        assert_eq!(s.guidance.params(&s.vessel.hull).lookahead, 32.0);
        assert_eq!(s.step_count(), 100);
        let usv = s.resolve_node(s.node(Role::Usv).unwrap()).unwrap();
        assert_eq!(usv.interfaces.len(), 3);
        assert!((usv.position.altitude - 3.0).abs() < 1e-12);
    }

    #[test]
    fn zero_dt_names_dt() {
        let text = format!("dt = 0.0\n{MINIMAL}");
        let e = Scenario::from_toml(&text).unwrap_err();
        assert_eq!(e.kind, ErrorKind::Schema);
        assert_eq!(e.path.as_deref(), Some("dt"));
        assert_eq!(e.line, Some(1));
        assert!(e.to_string().contains("dt"));
    }

    #[test]
    fn duplicate_id_is_an_invariant_violation() {
        let text = MINIMAL.replace("id = \"usv\"", "id = \"gcs\"");
        let e = Scenario::from_toml(&text).unwrap_err();
        assert_eq!(e.kind, ErrorKind::Invariant);
        assert_eq!(e.path.as_deref(), Some("nodes[1].id"));
        assert_eq!(e.line, Some(10));
    }

    #[test]
    fn unknown_key_rejected_with_path() {
        let text = MINIMAL.replace("[guidance]", "[guidance]\nlookahed = 20.0");
        let e = Scenario::from_toml(&text).unwrap_err();
        assert_eq!(e.kind, ErrorKind::Schema);
        assert!(e.message.contains("lookahed"), "{e}");
        assert_eq!(e.path.as_deref(), Some("guidance.lookahed"));
        assert!(e.line.is_some());
    }

    #[test]
    fn wrong_type_reports_nested_path() {
        let text = format!("{MINIMAL}\n[tracker]\nmax_rate = \"fast\"\n");
        let e = Scenario::from_toml(&text).unwrap_err();
        assert_eq!(e.kind, ErrorKind::Schema);
        assert_eq!(e.path.as_deref(), Some("tracker.max_rate"));
        assert_eq!(e.line, Some(text.lines().position(|l| l.starts_with("max_rate")).unwrap() + 1));
    }

    #[test]
    fn syntax_error_is_a_parse_error() {
        let e = Scenario::from_toml("duration = \n").unwrap_err();
        assert_eq!(e.kind, ErrorKind::Parse);
        assert_eq!(e.line, Some(1));
    }

    #[test]
    fn missing_usv_rejected() {
        let text = MINIMAL.replace("role = \"usv\"", "role = \"uav\"");
        let e = Scenario::from_toml(&text).unwrap_err();
        assert_eq!(e.kind, ErrorKind::Invariant);
    }

    #[test]
    fn geodetic_and_local_positions_agree() {
        let s = Scenario::from_toml(MINIMAL).unwrap();
        let g = Position::enu(250.0, -40.0, 2.0).resolve(&s.origin).unwrap();
        let p = Position { latitude: Some(g.latitude), longitude: Some(g.longitude), altitude: Some(2.0), ..Default::default() };
        assert_eq!(p.resolve(&s.origin).unwrap(), g);
        let mixed = Position { east: Some(1.0), latitude: Some(1.0), ..Default::default() };
        assert!(mixed.resolve(&s.origin).is_err());
    }

    #[test]
    fn digest_tracks_content() {
        let a = Scenario::from_toml(MINIMAL).unwrap();
        let mut b = a.clone();
        assert_eq!(a.digest(), b.digest());
        b.seed = 1;
        assert_ne!(a.digest(), b.digest());
        assert_eq!(a.digest().len(), 64);
    }
}
