use crate::scalar::{lit, Real};

/// Distances below this are clamped before evaluating the log-distance model.
pub const REFERENCE_DISTANCE_M: f64 = 1.0;

/// Constant of the free-space loss in dB with frequency in Hz and distance in m:
/// 20·log10(4π/c).
const FREE_SPACE_CONSTANT_DB: f64 = 147.55;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLoss<S> {
    pub loss_db: S,
    /// Set when the distance was below the reference distance.
    pub clamped: bool,
}

/// Log-distance path loss, `20·log10(f) + 10·n·log10(d) − 147.55`.
/// With `exponent = 2` this is the free-space (Friis) loss.
pub fn path_loss<S: Real>(distance: S, frequency: S, exponent: S) -> PathLoss<S> {
    debug_assert!(frequency > S::zero());
    let reference = lit::<S>(REFERENCE_DISTANCE_M);
    let clamped = !(distance >= reference);
    let d = if clamped { reference } else { distance };
    let loss_db = lit::<S>(20.0) * frequency.log10() + lit::<S>(10.0) * exponent * d.log10()
        - lit::<S>(FREE_SPACE_CONSTANT_DB);
    PathLoss { loss_db, clamped }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    // Friis: 20·log10(4π·d·f/c)
    fn friis(d: f64, f: f64) -> f64 {
        20.0 * (4.0 * std::f64::consts::PI * d * f / 299_792_458.0).log10()
    }

    #[test]
    fn free_space_examples() {
        assert_abs_diff_eq!(path_loss(1.0, 5e9, 2.0).loss_db, 46.42, epsilon = 0.01);
        assert_abs_diff_eq!(path_loss(1000.0, 5e9, 2.0).loss_db, 106.42, epsilon = 0.01);
        assert_abs_diff_eq!(path_loss(1000.0, 5e9, 2.0).loss_db, friis(1000.0, 5e9), epsilon = 0.01);
        let doubling = path_loss(2000.0, 5e9, 2.0).loss_db - path_loss(1000.0, 5e9, 2.0).loss_db;
        assert_abs_diff_eq!(doubling, 6.02, epsilon = 0.01);
    }

    #[test]
    fn short_distances_clamp() {
        let pl = path_loss(0.2, 5e9, 2.0);
        assert!(pl.clamped);
        assert_eq!(pl.loss_db, path_loss(1.0, 5e9, 2.0).loss_db);
        assert!(!path_loss(1.0, 5e9, 2.0).clamped);
    }

    proptest! {
        #[test]
        fn increasing_in_distance_and_frequency(d in 1.0f64..1e5, f in 1e8f64..1e10, n in 1.5f64..4.0, k in 1.001f64..10.0) {
            prop_assert!(path_loss(d * k, f, n).loss_db > path_loss(d, f, n).loss_db);
            prop_assert!(path_loss(d, f * k, n).loss_db > path_loss(d, f, n).loss_db);
        }
    }
}
