//! Deck-antenna RF localization: RSSI to range, then 2D nonlinear least
//! squares with the altitude held fixed.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{lit, Real};

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum LocalizationError {
    #[error("insufficient observations")]
    InsufficientObservations,
    #[error("localization unreliable (rms residual {0} m)")]
    Unreliable(f64),
    #[error("deck antennas are collinear")]
    CollinearAntennas,
    #[error("expected {expected} readings, got {got}")]
    ReadingCount { expected: usize, got: usize },
}

/// Link model between the UAV omni antenna and each deck antenna.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
#[serde(bound(deserialize = "S: Real + Deserialize<'de>"))]
pub struct RfRangingModel<S> {
    /// dBm, UAV transmitter
    pub tx_power: S,
    /// Sum of both antenna gains, dBi.
    pub gains: S,
    /// Hz
    pub frequency: S,
    pub path_loss_exponent: S,
    /// RMS range residual above which a fix is rejected, metres.
    pub max_residual: S,
}

impl<S: Real> Default for RfRangingModel<S> {
    fn default() -> Self {
        Self {
            tx_power: lit(10.0),
            gains: lit(4.0),
            frequency: lit(2.4e9),
            path_loss_exponent: lit(2.0),
            max_residual: lit(0.5),
        }
    }
}

impl<S: Real> RfRangingModel<S> {
    /// RSSI at `range` metres (range clamped to 1 m).
    pub fn rssi_at(&self, range: S) -> S {
        let pl = crate::radio::path_loss(range, self.frequency, self.path_loss_exponent);
        self.tx_power + self.gains - pl.loss_db
    }

    /// Inverse of [`rssi_at`](Self::rssi_at).
    pub fn range_of(&self, rssi: S) -> S {
        let loss = self.tx_power + self.gains - rssi;
        let ten = lit::<S>(10.0);
        let exponent = (loss - lit::<S>(20.0) * self.frequency.log10() + lit(147.55)) / (ten * self.path_loss_exponent);
        ten.powf(exponent)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RfFix<S> {
    /// Deck-frame horizontal position, metres.
    pub position: [S; 2],
    /// RMS range residual, metres.
    pub residual: S,
    pub iterations: usize,
}

/// Whether three or more antennas span a plane.
pub fn antennas_solvable<S: Real>(antennas: &[[S; 3]]) -> bool {
    let n = antennas.len();
    if n < 3 {
        return false;
    }
    let scale = antennas
        .iter()
        .flat_map(|a| antennas.iter().map(move |b| (a[0] - b[0]).hypot(a[1] - b[1])))
        .fold(S::zero(), S::max);
    let tol = lit::<S>(1e-9) * scale * scale;
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let (a, b, c) = (antennas[i], antennas[j], antennas[k]);
                let cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
                if cross.abs() > tol {
                    return true;
                }
            }
        }
    }
    false
}

/// Sum of squared range residuals at a horizontal position.
pub fn range_cost<S: Real>(xy: [S; 2], altitude: S, antennas: &[[S; 3]], ranges: &[Option<S>]) -> S {
    antennas
        .iter()
        .zip(ranges)
        .filter_map(|(a, r)| r.map(|r| (a, r)))
        .map(|(a, r)| {
            let d = distance(xy, altitude, a) - r;
            d * d
        })
        .fold(S::zero(), |acc, v| acc + v)
}

fn distance<S: Real>(xy: [S; 2], altitude: S, a: &[S; 3]) -> S {
    let (dx, dy, dz) = (xy[0] - a[0], xy[1] - a[1], altitude - a[2]);
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// Estimates the UAV's deck-frame horizontal position from per-antenna RSSI.
///
/// `rssi[i]` belongs to `antennas[i]`; `None` marks a missing reading.
/// Damped Gauss-Newton from the antenna centroid.
pub fn rf_localize<S: Real>(
    rssi: &[Option<S>],
    antennas: &[[S; 3]],
    altitude: S,
    model: &RfRangingModel<S>,
) -> Result<RfFix<S>, LocalizationError> {
    if rssi.len() != antennas.len() {
        return Err(LocalizationError::ReadingCount { expected: antennas.len(), got: rssi.len() });
    }
    let present: Vec<[S; 3]> = antennas.iter().zip(rssi).filter(|(_, r)| r.is_some()).map(|(a, _)| *a).collect();
    if present.len() < 3 {
        return Err(LocalizationError::InsufficientObservations);
    }
    if !antennas_solvable(&present) {
        return Err(LocalizationError::CollinearAntennas);
    }
    let ranges: Vec<Option<S>> = rssi.iter().map(|r| r.map(|v| model.range_of(v))).collect();

    let count = S::from_count(present.len());
    let mut x = [
        present.iter().fold(S::zero(), |s, a| s + a[0]) / count,
        present.iter().fold(S::zero(), |s, a| s + a[1]) / count,
    ];
    let mut cost = range_cost(x, altitude, antennas, &ranges);
    let mut lambda = lit::<S>(1e-3);
    let mut iterations = 0;
    for _ in 0..100 {
        iterations += 1;
        // normal equations J^T J dx = -J^T r
        let (mut a11, mut a12, mut a22, mut g1, mut g2) = (S::zero(), S::zero(), S::zero(), S::zero(), S::zero());
        for (a, r) in antennas.iter().zip(&ranges) {
            let Some(r) = *r else { continue };
            let d = distance(x, altitude, a).max(lit(1e-9));
            let (j1, j2) = ((x[0] - a[0]) / d, (x[1] - a[1]) / d);
            let res = d - r;
            a11 = a11 + j1 * j1;
            a12 = a12 + j1 * j2;
            a22 = a22 + j2 * j2;
            g1 = g1 + j1 * res;
            g2 = g2 + j2 * res;
        }
        let mut improved = false;
        for _ in 0..20 {
            let (m11, m22) = (a11 * (S::one() + lambda) + lambda, a22 * (S::one() + lambda) + lambda);
            let det = m11 * m22 - a12 * a12;
            let dx = [-(m22 * g1 - a12 * g2) / det, -(m11 * g2 - a12 * g1) / det];
            let trial = [x[0] + dx[0], x[1] + dx[1]];
            let trial_cost = range_cost(trial, altitude, antennas, &ranges);
            if trial_cost <= cost {
                let step = dx[0].hypot(dx[1]);
                x = trial;
                cost = trial_cost;
                lambda = (lambda * lit(0.3)).max(lit(1e-12));
                improved = step > lit(1e-10);
                break;
            }
            lambda = lambda * lit(10.0);
        }
        if !improved {
            break;
        }
    }
    let residual = (cost / count).sqrt();
    if !(residual <= model.max_residual) {
        return Err(LocalizationError::Unreliable(residual.to_f64_lossy()));
    }
    Ok(RfFix { position: x, residual, iterations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn triangle() -> Vec<[f64; 3]> {
        (0..3)
            .map(|k| {
                let a = (90.0 + 120.0 * k as f64).to_radians();
                [1.2 * a.cos(), 1.2 * a.sin(), 0.0]
            })
            .collect()
    }

    fn readings(truth: [f64; 2], altitude: f64, antennas: &[[f64; 3]], model: &RfRangingModel<f64>) -> Vec<Option<f64>> {
        antennas.iter().map(|a| Some(model.rssi_at(distance(truth, altitude, a)))).collect()
    }

    /// Exhaustive 0.01 m grid minimising the same range cost.
    pub(crate) fn grid_oracle(antennas: &[[f64; 3]], ranges: &[Option<f64>], altitude: f64, lo: [f64; 2], hi: [f64; 2]) -> [f64; 2] {
        let step = 0.01;
        let nx = ((hi[0] - lo[0]) / step).round() as usize;
        let ny = ((hi[1] - lo[1]) / step).round() as usize;
        let mut best = (f64::INFINITY, lo);
        for i in 0..=nx {
            for j in 0..=ny {
                let p = [lo[0] + i as f64 * step, lo[1] + j as f64 * step];
                let c = range_cost(p, altitude, antennas, ranges);
                if c < best.0 {
                    best = (c, p);
                }
            }
        }
        best.1
    }

    #[test]
    fn range_inverts_rssi() {
        let m = RfRangingModel::default();
        for r in [1.0f64, 2.5, 10.0, 80.0] {
            assert!((m.range_of(m.rssi_at(r)) - r).abs() < 1e-9);
        }
    }

    #[test]
    fn centroid_overhead() {
        let m = RfRangingModel::default();
        let ants = triangle();
        let fix = rf_localize(&readings([0.0, 0.0], 3.0, &ants, &m), &ants, 3.0, &m).unwrap();
        assert!(fix.position[0].hypot(fix.position[1]) < 0.01);
    }

    #[test]
    fn offset_position_matches_grid_oracle() {
        let m = RfRangingModel::default();
        let ants = triangle();
        let truth = [0.37, -0.41];
        let rssi = readings(truth, 2.0, &ants, &m);
        let fix = rf_localize(&rssi, &ants, 2.0, &m).unwrap();
        assert!((fix.position[0] - truth[0]).hypot(fix.position[1] - truth[1]) < 0.05);
        let ranges: Vec<_> = rssi.iter().map(|r| r.map(|v| m.range_of(v))).collect();
        let g = grid_oracle(&ants, &ranges, 2.0, [-1.2, -1.2], [1.2, 1.2]);
        assert!((fix.position[0] - g[0]).hypot(fix.position[1] - g[1]) < 0.05);
    }

    #[test]
    fn two_readings_are_insufficient() {
        let m = RfRangingModel::default();
        let ants = triangle();
        let mut rssi = readings([0.1, 0.1], 2.0, &ants, &m);
        rssi[1] = None;
        assert_eq!(rf_localize(&rssi, &ants, 2.0, &m).unwrap_err(), LocalizationError::InsufficientObservations);
    }

    #[test]
    fn inconsistent_readings_are_unreliable() {
        let m = RfRangingModel::default();
        let ants = triangle();
        let mut rssi = readings([0.1, 0.1], 2.0, &ants, &m);
        rssi[0] = rssi[0].map(|v| v + 25.0);
        assert!(matches!(rf_localize(&rssi, &ants, 2.0, &m), Err(LocalizationError::Unreliable(_))));
    }

    #[test]
    fn collinear_antennas_rejected() {
        let m = RfRangingModel::default();
        let ants = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]];
        let rssi = readings([0.5, 0.5], 2.0, &ants, &m);
        assert_eq!(rf_localize(&rssi, &ants, 2.0, &m).unwrap_err(), LocalizationError::CollinearAntennas);
        assert!(antennas_solvable(&triangle()));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn recovers_noiseless_position(r in 0.0f64..0.55, theta in 0.0f64..360.0, alt in 1.0f64..6.0) {
            let m = RfRangingModel::default();
            let ants = triangle();
            let truth = [r * theta.to_radians().cos(), r * theta.to_radians().sin()];
            let fix = rf_localize(&readings(truth, alt, &ants, &m), &ants, alt, &m).unwrap();
            prop_assert!((fix.position[0] - truth[0]).hypot(fix.position[1] - truth[1]) < 0.05);
        }
    }
}
