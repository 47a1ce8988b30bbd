//! Docking and charging sequence after touchdown, plus the magnet holding
//! check.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{lit, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ChargeState {
    LandedUnsecured,
    MagnetEngaged,
    Centered,
    ConnectorEngaged,
    Charging,
    ChargeComplete,
    ConnectorRetracted,
    ReadyForTakeoff,
    Departed,
}

impl ChargeState {
    pub const ALL: [ChargeState; 9] = [
        ChargeState::LandedUnsecured,
        ChargeState::MagnetEngaged,
        ChargeState::Centered,
        ChargeState::ConnectorEngaged,
        ChargeState::Charging,
        ChargeState::ChargeComplete,
        ChargeState::ConnectorRetracted,
        ChargeState::ReadyForTakeoff,
        ChargeState::Departed,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ChargeState::LandedUnsecured => "LANDED_UNSECURED",
            ChargeState::MagnetEngaged => "MAGNET_ENGAGED",
            ChargeState::Centered => "CENTERED",
            ChargeState::ConnectorEngaged => "CONNECTOR_ENGAGED",
            ChargeState::Charging => "CHARGING",
            ChargeState::ChargeComplete => "CHARGE_COMPLETE",
            ChargeState::ConnectorRetracted => "CONNECTOR_RETRACTED",
            ChargeState::ReadyForTakeoff => "READY_FOR_TAKEOFF",
            ChargeState::Departed => "DEPARTED",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChargeEvent {
    TouchdownConfirmed,
    MagnetOn,
    Centered,
    ConnectorIn,
    ChargeStarted,
    ChargeDone,
    ConnectorOut,
    TakeoffCleared,
    Demagnetized,
}

impl ChargeEvent {
    pub const ALL: [ChargeEvent; 9] = [
        ChargeEvent::TouchdownConfirmed,
        ChargeEvent::MagnetOn,
        ChargeEvent::Centered,
        ChargeEvent::ConnectorIn,
        ChargeEvent::ChargeStarted,
        ChargeEvent::ChargeDone,
        ChargeEvent::ConnectorOut,
        ChargeEvent::TakeoffCleared,
        ChargeEvent::Demagnetized,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum ChargeError {
    #[error("unsafe takeoff blocked")]
    UnsafeTakeoff,
}

/// Event that did not match the current state; the state is left unchanged.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProtocolWarning {
    pub state: ChargeState,
    pub event: ChargeEvent,
    pub reason: &'static str,
}

impl std::fmt::Display for ProtocolWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:?} ignored in {}: {}", self.event, self.state.as_str(), self.reason)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ChargeMachine {
    pub state: ChargeState,
    pub motors_on: bool,
    pub magnet_engaged: bool,
}

impl Default for ChargeMachine {
    fn default() -> Self {
        Self::new()
    }
}

impl ChargeMachine {
    /// Just landed: motors still running, magnet off.
    pub fn new() -> Self {
        Self { state: ChargeState::LandedUnsecured, motors_on: true, magnet_engaged: false }
    }

    /// Applies `event`. `Ok(Some(_))` carries a protocol warning for an event
    /// that did not apply; the machine is unchanged in that case and on error.
    pub fn step(&mut self, event: Option<ChargeEvent>) -> Result<Option<ProtocolWarning>, ChargeError> {
        use ChargeEvent as E;
        use ChargeState as St;
        let Some(event) = event else { return Ok(None) };
        let warn = |reason| Ok(Some(ProtocolWarning { state: self.state, event, reason }));
        match (self.state, event) {
            (St::LandedUnsecured | St::MagnetEngaged | St::Centered, E::TouchdownConfirmed) => {
                if !self.motors_on {
                    return warn("motors already off");
                }
                self.motors_on = false;
            }
            (St::LandedUnsecured, E::MagnetOn) => {
                self.magnet_engaged = true;
                self.state = St::MagnetEngaged;
            }
            (St::MagnetEngaged, E::Centered) => self.state = St::Centered,
            (St::Centered, E::ConnectorIn) => {
                if self.motors_on {
                    return warn("motors must be off before the connector engages");
                }
                self.state = St::ConnectorEngaged;
            }
            (St::ConnectorEngaged, E::ChargeStarted) => self.state = St::Charging,
            (St::Charging, E::ChargeDone) => self.state = St::ChargeComplete,
            (St::ChargeComplete, E::ConnectorOut) => self.state = St::ConnectorRetracted,
            (St::ConnectorRetracted, E::TakeoffCleared) => {
                self.motors_on = true;
                self.state = St::ReadyForTakeoff;
            }
            (s, E::TakeoffCleared) if s < St::ConnectorRetracted => return Err(ChargeError::UnsafeTakeoff),
            (St::ReadyForTakeoff, E::Demagnetized) => {
                self.magnet_engaged = false;
                self.state = St::Departed;
            }
            _ => return warn("event does not match state"),
        }
        Ok(None)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
#[serde(bound(deserialize = "S: Real + Deserialize<'de>"))]
pub struct Magnet<S> {
    /// N
    pub holding_force: S,
    pub engaged: bool,
}

impl<S: Real> Default for Magnet<S> {
    fn default() -> Self {
        Self { holding_force: lit(300.0), engaged: false }
    }
}

/// Whether the engaged magnet holds against `disturbance_force` newtons.
pub fn secure_check<S: Real>(disturbance_force: S, magnet: &Magnet<S>) -> bool {
    magnet.engaged && disturbance_force < magnet.holding_force
}

/// History flags carried alongside a [`ChargeMachine`] by the safety checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct SafetyHistory {
    pub saw_magnet_engaged: bool,
    pub saw_connector_retracted: bool,
    pub saw_demagnetized: bool,
}

impl SafetyHistory {
    /// Records the step just taken and reports the first violated rule.
    pub fn observe(&mut self, before: &ChargeMachine, after: &ChargeMachine, event: Option<ChargeEvent>) -> Result<(), &'static str> {
        if after.state == ChargeState::MagnetEngaged {
            self.saw_magnet_engaged = true;
        }
        if after.state == ChargeState::ConnectorRetracted {
            self.saw_connector_retracted = true;
        }
        if before.magnet_engaged && !after.magnet_engaged && event == Some(ChargeEvent::Demagnetized) {
            self.saw_demagnetized = true;
        }
        if after.state == ChargeState::Charging && before.state != ChargeState::Charging {
            if !self.saw_magnet_engaged {
                return Err("charging without magnet engaged");
            }
            if after.motors_on {
                return Err("charging with motors on");
            }
        }
        if after.state == ChargeState::Departed && before.state != ChargeState::Departed {
            if !self.saw_connector_retracted {
                return Err("departed without connector retracted");
            }
            if !self.saw_demagnetized {
                return Err("departed without demagnetizing");
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        let mut m = ChargeMachine::new();
        assert_eq!(m.step(None), Ok(None));
        assert_eq!(m, ChargeMachine::new());
        m.step(Some(ChargeEvent::MagnetOn)).unwrap();
        assert_eq!(m.state, ChargeState::MagnetEngaged);

        let mut m = ChargeMachine { state: ChargeState::Charging, motors_on: false, magnet_engaged: true };
        let before = m;
        assert_eq!(m.step(Some(ChargeEvent::TakeoffCleared)), Err(ChargeError::UnsafeTakeoff));
        assert_eq!(m, before);
        assert_eq!(ChargeError::UnsafeTakeoff.to_string(), "unsafe takeoff blocked");
    }

    #[test]
    fn nominal_sequence_has_no_warnings() {
        let mut m = ChargeMachine::new();
        let script = [
            ChargeEvent::TouchdownConfirmed,
            ChargeEvent::MagnetOn,
            ChargeEvent::Centered,
            ChargeEvent::ConnectorIn,
            ChargeEvent::ChargeStarted,
            ChargeEvent::ChargeDone,
            ChargeEvent::ConnectorOut,
            ChargeEvent::TakeoffCleared,
            ChargeEvent::Demagnetized,
        ];
        let mut states = vec![];
        for e in script {
            assert_eq!(m.step(Some(e)), Ok(None), "{e:?}");
            states.push(m.state);
        }
        assert_eq!(states[1..], ChargeState::ALL[1..]);
        assert!(m.motors_on && !m.magnet_engaged);
    }

    #[test]
    fn connector_refused_with_motors_running() {
        let mut m = ChargeMachine { state: ChargeState::Centered, motors_on: true, magnet_engaged: true };
        let w = m.step(Some(ChargeEvent::ConnectorIn)).unwrap().unwrap();
        assert_eq!(w.state, ChargeState::Centered);
        assert_eq!(m.state, ChargeState::Centered);
    }

    #[test]
    fn magnet_margin() {
        let on = Magnet { holding_force: 300.0, engaged: true };
        assert!(secure_check(100.0, &on));
        assert!(!secure_check(300.0, &on));
        assert!(secure_check(299.99, &on));
        assert!(!secure_check(0.0, &Magnet { holding_force: 300.0, engaged: false }));
        assert_eq!(Magnet::<f64>::default().holding_force, 300.0);
    }

    fn event() -> impl Strategy<Value = Option<ChargeEvent>> {
        proptest::option::of(proptest::sample::select(ChargeEvent::ALL.to_vec()))
    }

    proptest! {
        #[test]
        fn random_sequences_stay_safe(seq in proptest::collection::vec(event(), 0..40)) {
            let mut m = ChargeMachine::new();
            let mut h = SafetyHistory::default();
            for e in seq {
                let before = m;
                match m.step(e) {
                    Ok(Some(_)) | Err(_) => prop_assert_eq!(m, before),
                    Ok(None) => {}
                }
                prop_assert!(h.observe(&before, &m, e).is_ok());
                prop_assert!(m.state as usize <= before.state as usize + 1);
            }
        }
    }
}
