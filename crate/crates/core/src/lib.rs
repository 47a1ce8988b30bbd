//! Simulation of a USV with a shore ground station, LTE fallback, an
//! optional UAV relay and UAV landing on the USV deck.
//!
//! Numeric code is generic over [`scalar::Real`]; the aliases below fix it
//! to `f64`.

// `!(x >= y)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod geo;
pub mod guidance;
pub mod landing;
pub mod radio;
pub mod relay;
pub mod scalar;
pub mod sim;
pub mod tracker;
pub mod vessel;

pub type GeoPoint = geo::GeoPoint<f64>;
pub type EnuVector = geo::EnuVector<f64>;
pub type Heading = geo::Heading<f64>;
pub type GeoPose = geo::GeoPose<f64>;
pub type VesselState = vessel::VesselState<f64>;
pub type HullParams = vessel::HullParams<f64>;
pub type LosGuidance = guidance::LosGuidance<f64>;
pub type InterfaceConfig = radio::InterfaceConfig<f64>;
pub type RadioNode = radio::RadioNode<f64>;
pub type GimbalState = tracker::GimbalState<f64>;
pub type RelayPolicy = relay::RelayPolicy<f64>;
pub type RfRangingModel = landing::RfRangingModel<f64>;
