use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{bearing, geo_to_enu, GeoError, GeoPoint, Heading};
use crate::radio::occlusion::{los_blocked, ObstacleMap};
use crate::radio::pattern::{antenna_gain, AntennaPattern};
use crate::radio::propagation::path_loss;
use crate::scalar::{clamp, lit, Real};

/// RSSI span over which throughput ramps from zero to the interface maximum.
pub const THROUGHPUT_RAMP_DB: f64 = 20.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RadioError {
    #[error(transparent)]
    Geo(#[from] GeoError),
    #[error("node `{0}` has no interfaces")]
    NoInterfaces(String),
    #[error("node `{node}` has an invalid interface: {field}")]
    InvalidInterface { node: String, field: &'static str },
    #[error("link endpoints coincide")]
    CoincidentEndpoints,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterfaceKind {
    WifiDirectional,
    WifiOmni,
    Lte,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "S: Real + Deserialize<'de>"))]
pub struct InterfaceConfig<S> {
    pub kind: InterfaceKind,
    /// dBm
    pub tx_power: S,
    /// Hz
    pub frequency: S,
    pub pattern: AntennaPattern<S>,
    /// Receiver sensitivity, dBm.
    pub rssi_floor: S,
    /// Mbps
    pub max_throughput: S,
    /// ms
    pub base_latency: S,
}

impl<S: Real> InterfaceConfig<S> {
    /// Stock parameters per interface class: a 25 dBi / 8° 5.8 GHz dish, a
    /// 5 dBi 5.8 GHz omni, and an 800 MHz LTE modem.
    pub fn default_for(kind: InterfaceKind) -> Self {
        match kind {
            InterfaceKind::WifiDirectional => Self {
                kind,
                tx_power: lit(20.0),
                frequency: lit(5.8e9),
                pattern: AntennaPattern::Directional {
                    boresight_gain: lit(25.0),
                    half_power_beamwidth: lit(8.0),
                    sidelobe_floor: lit(30.0),
                },
                rssi_floor: lit(-80.0),
                max_throughput: lit(400.0),
                base_latency: lit(5.0),
            },
            InterfaceKind::WifiOmni => Self {
                kind,
                tx_power: lit(20.0),
                frequency: lit(5.8e9),
                pattern: AntennaPattern::Omni { gain: lit(5.0) },
                rssi_floor: lit(-80.0),
                max_throughput: lit(400.0),
                base_latency: lit(5.0),
            },
            InterfaceKind::Lte => Self {
                kind,
                tx_power: lit(23.0),
                frequency: lit(800e6),
                pattern: AntennaPattern::Omni { gain: lit(0.0) },
                rssi_floor: lit(-100.0),
                max_throughput: lit(100.0),
                base_latency: lit(40.0),
            },
        }
    }

    pub fn validate(&self) -> Result<(), &'static str> {
        if !(self.frequency.is_finite() && self.frequency > S::zero()) {
            return Err("frequency");
        }
        if !(self.max_throughput.is_finite() && self.max_throughput > S::zero()) {
            return Err("max_throughput");
        }
        if !self.tx_power.is_finite() {
            return Err("tx_power");
        }
        if !self.rssi_floor.is_finite() {
            return Err("rssi_floor");
        }
        if !(self.base_latency.is_finite() && self.base_latency >= S::zero()) {
            return Err("base_latency");
        }
        self.pattern.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "S: Real + Deserialize<'de>"))]
pub struct RadioNode<S> {
    pub id: String,
    /// Antenna position; altitude includes the mast height.
    pub position: GeoPoint<S>,
    pub interfaces: Vec<InterfaceConfig<S>>,
}

impl<S: Real> RadioNode<S> {
    pub fn validate(&self) -> Result<(), RadioError> {
        self.position.validate()?;
        if self.interfaces.is_empty() {
            return Err(RadioError::NoInterfaces(self.id.clone()));
        }
        for iface in &self.interfaces {
            iface
                .validate()
                .map_err(|field| RadioError::InvalidInterface { node: self.id.clone(), field })?;
        }
        Ok(())
    }

    pub fn interface(&self, kind: InterfaceKind) -> Option<&InterfaceConfig<S>> {
        self.interfaces.iter().find(|i| i.kind == kind)
    }
}

/// Where an antenna is pointed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Pointing<S> {
    /// Boresight exactly on the peer.
    Aligned,
    /// Earth-frame boresight azimuth.
    Boresight(Heading<S>),
}

/// One side of a link.
#[derive(Debug, Clone, Copy)]
pub struct LinkEnd<'a, S> {
    pub position: GeoPoint<S>,
    pub interface: &'a InterfaceConfig<S>,
    pub pointing: Pointing<S>,
}

impl<'a, S: Real> LinkEnd<'a, S> {
    pub fn new(position: GeoPoint<S>, interface: &'a InterfaceConfig<S>, pointing: Pointing<S>) -> Self {
        Self { position, interface, pointing }
    }

    fn gain_towards(&self, peer: &GeoPoint<S>) -> S {
        let off = match self.pointing {
            Pointing::Aligned => S::zero(),
            // azimuth only; a peer straight overhead counts as on boresight
            Pointing::Boresight(h) => match bearing(&self.position, peer) {
                Ok(b) => b.signed_difference(h),
                Err(_) => S::zero(),
            },
        };
        antenna_gain(&self.interface.pattern, off)
    }
}

/// Propagation context shared by all links in a step.
#[derive(Debug, Clone, Copy)]
pub struct LinkEnvironment<'a, S> {
    pub obstacles: &'a ObstacleMap<S>,
    pub path_loss_exponent: S,
    /// dB subtracted when the sight line is blocked.
    pub blockage_penalty: S,
    /// Whether the area has LTE coverage.
    pub lte_in_coverage: bool,
}

/// Noise-free link budget terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget<S> {
    pub rssi: S,
    pub blocked: bool,
    pub distance: S,
    pub path_loss: S,
    pub path_loss_clamped: bool,
    pub tx_gain: S,
    pub rx_gain: S,
}

/// Per-step observation of one interface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "S: Real + Deserialize<'de>"))]
pub struct LinkSample<S> {
    /// dBm
    pub rssi: S,
    pub blocked: bool,
    pub connected: bool,
    /// Mbps
    pub throughput: S,
    /// ms, absent while disconnected.
    pub latency: Option<S>,
}

impl<S: Real> LinkSample<S> {
    /// Classifies an RSSI reading against the receiving interface.
    pub fn from_rssi(rssi: S, blocked: bool, iface: &InterfaceConfig<S>, lte_in_coverage: bool) -> Self {
        let in_service = iface.kind != InterfaceKind::Lte || lte_in_coverage;
        let connected = in_service && rssi >= iface.rssi_floor;
        Self {
            rssi,
            blocked,
            connected,
            throughput: if connected { throughput_of(rssi, iface) } else { S::zero() },
            latency: connected.then_some(iface.base_latency),
        }
    }

    pub fn disconnected(rssi: S) -> Self {
        Self { rssi, blocked: false, connected: false, throughput: S::zero(), latency: None }
    }
}

/// Additive budget: tx power + both antenna gains − path loss − blockage.
///
/// LTE is served through the operator network, so obstacles between the
/// endpoints never block it.
pub fn link_budget<S: Real>(
    tx: &LinkEnd<'_, S>,
    rx: &LinkEnd<'_, S>,
    env: &LinkEnvironment<'_, S>,
) -> Result<LinkBudget<S>, RadioError> {
    let offset = geo_to_enu(&tx.position, &rx.position)?;
    let distance = offset.norm();
    if distance == S::zero() {
        return Err(RadioError::CoincidentEndpoints);
    }
    let pl = path_loss(distance, rx.interface.frequency, env.path_loss_exponent);
    let blocked = rx.interface.kind != InterfaceKind::Lte && los_blocked(&tx.position, &rx.position, env.obstacles)?;
    let tx_gain = tx.gain_towards(&rx.position);
    let rx_gain = rx.gain_towards(&tx.position);
    let mut rssi = tx.interface.tx_power + tx_gain + rx_gain - pl.loss_db;
    if blocked {
        rssi = rssi - env.blockage_penalty;
    }
    Ok(LinkBudget {
        rssi,
        blocked,
        distance,
        path_loss: pl.loss_db,
        path_loss_clamped: pl.clamped,
        tx_gain,
        rx_gain,
    })
}

/// Noise-free [`LinkSample`] for a link.
pub fn link_rssi<S: Real>(
    tx: &LinkEnd<'_, S>,
    rx: &LinkEnd<'_, S>,
    env: &LinkEnvironment<'_, S>,
) -> Result<LinkSample<S>, RadioError> {
    let budget = link_budget(tx, rx, env)?;
    Ok(LinkSample::from_rssi(budget.rssi, budget.blocked, rx.interface, env.lte_in_coverage))
}

/// Linear ramp from 0 Mbps at the sensitivity floor to the interface maximum
/// [`THROUGHPUT_RAMP_DB`] above it. Zero below the floor.
pub fn throughput_of<S: Real>(rssi: S, iface: &InterfaceConfig<S>) -> S {
    if !(rssi >= iface.rssi_floor) {
        return S::zero();
    }
    let fraction = (rssi - iface.rssi_floor) / lit(THROUGHPUT_RAMP_DB);
    clamp(fraction * iface.max_throughput, S::zero(), iface.max_throughput)
}
