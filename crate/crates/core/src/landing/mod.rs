//! UAV landing on the USV deck: RF, visual and ultrasonic terminal guidance,
//! and the docking/charging sequence.

mod beacons;
mod charging;
mod localization;
mod stages;

use serde::{Deserialize, Serialize};

use crate::scalar::{lit, Real};

pub use beacons::{
    deck_yaw, default_lamps, led_visible, to_body, ultrasonic_reading, Lamp, LampColor, LampSighting,
};
pub use charging::{
    secure_check, ChargeError, ChargeEvent, ChargeMachine, ChargeState, Magnet, ProtocolWarning, SafetyHistory,
};
pub use localization::{
    antennas_solvable, range_cost, rf_localize, LocalizationError, RfFix, RfRangingModel,
};
pub use stages::{stage_transition, LandingStage, StageEvidence, StageMachine};

/// Deck-mounted landing aids, in the deck frame (x forward, y starboard,
/// z up, origin at the platform centre).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
#[serde(bound(deserialize = "S: Real + Deserialize<'de>"))]
pub struct DeckSensorSuite<S> {
    pub rf_antennas: Vec<[S; 3]>,
    pub lamps: Vec<Lamp<S>>,
    pub platform_center: [S; 3],
}

impl<S: Real> Default for DeckSensorSuite<S> {
    /// Three RF antennas on a 1.2 m circle and the default lamp triangle.
    fn default() -> Self {
        let rf_antennas = [90.0, 210.0, 330.0]
            .into_iter()
            .map(|deg| {
                let a = lit::<S>(deg).to_radians();
                let r = lit::<S>(1.2);
                [r * a.cos(), r * a.sin(), S::zero()]
            })
            .collect();
        Self { rf_antennas, lamps: default_lamps(), platform_center: [S::zero(); 3] }
    }
}

impl<S: Real> DeckSensorSuite<S> {
    pub fn validate(&self) -> Result<(), &'static str> {
        if self.rf_antennas.len() < 3 {
            return Err("rf_antennas");
        }
        if !antennas_solvable(&self.rf_antennas) {
            return Err("rf_antennas");
        }
        let mut colors: Vec<_> = self.lamps.iter().map(|l| l.color).collect();
        colors.sort();
        colors.dedup();
        if colors.len() != self.lamps.len() || self.lamps.len() != 3 {
            return Err("lamps");
        }
        Ok(())
    }
}
