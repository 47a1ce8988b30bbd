use serde::{Deserialize, Serialize};

use crate::radio::link::LinkSample;
use crate::scalar::{lit, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Selection {
    Wifi,
    Lte,
    #[default]
    None,
}

impl Selection {
    pub fn as_str(self) -> &'static str {
        match self {
            Selection::Wifi => "WIFI",
            Selection::Lte => "LTE",
            Selection::None => "NONE",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
#[serde(bound(deserialize = "S: Real + Deserialize<'de>"))]
pub struct SelectionPolicy<S> {
    /// WiFi is dropped at or below this RSSI, dBm.
    pub switch_down: S,
    /// Extra margin WiFi must clear to be re-selected, dB.
    pub hysteresis: S,
}

impl<S: Real> Default for SelectionPolicy<S> {
    fn default() -> Self {
        Self { switch_down: lit(-77.0), hysteresis: lit(6.0) }
    }
}

impl<S: Real> SelectionPolicy<S> {
    pub fn validate(&self) -> Result<(), &'static str> {
        if !self.switch_down.is_finite() {
            return Err("switch_down");
        }
        if !(self.hysteresis.is_finite() && self.hysteresis >= S::zero()) {
            return Err("hysteresis");
        }
        Ok(())
    }
}

/// WiFi first, LTE as backup.
pub fn select_interface<S: Real>(
    wifi: &LinkSample<S>,
    lte: &LinkSample<S>,
    previous: Selection,
    policy: &SelectionPolicy<S>,
) -> Selection {
    let threshold = if previous == Selection::Wifi {
        policy.switch_down
    } else {
        policy.switch_down + policy.hysteresis
    };
    if wifi.connected && wifi.rssi > threshold {
        Selection::Wifi
    } else if lte.connected {
        Selection::Lte
    } else {
        Selection::None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radio::link::{InterfaceConfig, InterfaceKind};
    use proptest::prelude::*;

    fn wifi(rssi: f64) -> LinkSample<f64> {
        LinkSample::from_rssi(rssi, false, &InterfaceConfig::default_for(InterfaceKind::WifiDirectional), true)
    }

    fn lte(rssi: f64) -> LinkSample<f64> {
        LinkSample::from_rssi(rssi, false, &InterfaceConfig::default_for(InterfaceKind::Lte), true)
    }

    #[test]
    fn examples() {
        let p = SelectionPolicy::default();
        assert_eq!(select_interface(&wifi(-50.0), &lte(-60.0), Selection::None, &p), Selection::Wifi);
        assert_eq!(select_interface(&wifi(-110.0), &lte(-60.0), Selection::Wifi, &p), Selection::Lte);
        assert_eq!(select_interface(&wifi(-110.0), &lte(-120.0), Selection::Lte, &p), Selection::None);
    }

    #[test]
    fn hysteresis_band() {
        let p = SelectionPolicy::default();
        // -74 dBm: above switch-down, below switch-down + hysteresis
        assert_eq!(select_interface(&wifi(-74.0), &lte(-60.0), Selection::Wifi, &p), Selection::Wifi);
        assert_eq!(select_interface(&wifi(-74.0), &lte(-60.0), Selection::Lte, &p), Selection::Lte);
        assert_eq!(select_interface(&wifi(-70.0), &lte(-60.0), Selection::Lte, &p), Selection::Wifi);
    }

    #[test]
    fn serializes_uppercase() {
        assert_eq!(serde_json::to_string(&Selection::Wifi).unwrap(), "\"WIFI\"");
        assert_eq!(Selection::None.as_str(), "NONE");
    }

    proptest! {
        #[test]
        fn fixed_point_after_one_step(w in -110.0f64..-30.0, l in -120.0f64..-40.0, start in 0usize..3) {
            let p = SelectionPolicy::default();
            let prev = [Selection::Wifi, Selection::Lte, Selection::None][start];
            let (ws, ls) = (wifi(w), lte(l));
            let once = select_interface(&ws, &ls, prev, &p);
            let twice = select_interface(&ws, &ls, once, &p);
            prop_assert_eq!(once, twice);
        }
    }
}
