use serde::{Deserialize, Serialize};

use crate::geo::wrap_signed;
use crate::scalar::{lit, Real};

/// Main-lobe antenna model.
///
/// A directional pattern loses `12·(θ/θ3dB)²` dB off boresight, floored at
/// `sidelobe_floor` below the peak, so the gain is 3 dB down at half the
/// half-power beamwidth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
#[serde(bound(deserialize = "S: Real + Deserialize<'de>"))]
pub enum AntennaPattern<S> {
    Omni {
        gain: S,
    },
    Directional {
        boresight_gain: S,
        /// Degrees, in (0, 360].
        half_power_beamwidth: S,
        /// dB below boresight, ≥ 0.
        sidelobe_floor: S,
    },
}

impl<S: Real> AntennaPattern<S> {
    pub fn peak_gain(&self) -> S {
        match *self {
            AntennaPattern::Omni { gain } => gain,
            AntennaPattern::Directional { boresight_gain, .. } => boresight_gain,
        }
    }

    pub fn is_directional(&self) -> bool {
        matches!(self, AntennaPattern::Directional { .. })
    }

    pub fn validate(&self) -> Result<(), &'static str> {
        match *self {
            AntennaPattern::Omni { gain } if !gain.is_finite() => Err("gain"),
            AntennaPattern::Omni { .. } => Ok(()),
            AntennaPattern::Directional { boresight_gain, half_power_beamwidth, sidelobe_floor } => {
                if !boresight_gain.is_finite() {
                    Err("boresight_gain")
                } else if !(half_power_beamwidth > S::zero() && half_power_beamwidth <= lit(360.0)) {
                    Err("half_power_beamwidth")
                } else if !(sidelobe_floor >= S::zero() && sidelobe_floor.is_finite()) {
                    Err("sidelobe_floor")
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Same pattern with the peak gain shifted by `delta_db`.
    pub fn with_gain_offset(self, delta_db: S) -> Self {
        match self {
            AntennaPattern::Omni { gain } => AntennaPattern::Omni { gain: gain + delta_db },
            AntennaPattern::Directional { boresight_gain, half_power_beamwidth, sidelobe_floor } => {
                AntennaPattern::Directional {
                    boresight_gain: boresight_gain + delta_db,
                    half_power_beamwidth,
                    sidelobe_floor,
                }
            }
        }
    }
}

/// Gain in dBi at `off_boresight` degrees. Any angle is accepted and folded
/// into `[0, 180]`.
pub fn antenna_gain<S: Real>(pattern: &AntennaPattern<S>, off_boresight: S) -> S {
    match *pattern {
        AntennaPattern::Omni { gain } => gain,
        AntennaPattern::Directional { boresight_gain, half_power_beamwidth, sidelobe_floor } => {
            let ratio = wrap_signed(off_boresight).abs() / half_power_beamwidth;
            boresight_gain - (lit::<S>(12.0) * ratio * ratio).min(sidelobe_floor)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn dish() -> AntennaPattern<f64> {
        AntennaPattern::Directional { boresight_gain: 25.0, half_power_beamwidth: 8.0, sidelobe_floor: 30.0 }
    }

    #[test]
    fn gain_examples() {
        assert_eq!(antenna_gain(&dish(), 0.0), 25.0);
        assert_abs_diff_eq!(antenna_gain(&dish(), 4.0), 22.0, epsilon = 0.01);
        assert_eq!(antenna_gain(&dish(), 180.0), -5.0);
        assert_eq!(antenna_gain(&AntennaPattern::Omni { gain: 2.0 }, 123.0), 2.0);
    }

    #[test]
    fn validation() {
        assert!(dish().validate().is_ok());
        let bad = AntennaPattern::Directional { boresight_gain: 25.0, half_power_beamwidth: 0.0, sidelobe_floor: 30.0 };
        assert_eq!(bad.validate(), Err("half_power_beamwidth"));
    }

    proptest! {
        #[test]
        fn even_and_non_increasing(a in 0.0f64..180.0, b in 0.0f64..180.0) {
            let p = dish();
            prop_assert_eq!(antenna_gain(&p, a), antenna_gain(&p, -a));
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(antenna_gain(&p, hi) <= antenna_gain(&p, lo));
        }
    }
}
