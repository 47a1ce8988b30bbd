//! Link budgets for the directional WiFi, omnidirectional WiFi and LTE
//! interfaces, obstacle occlusion, and WiFi/LTE failover.

mod link;
mod occlusion;
mod pattern;
mod propagation;
mod selection;

pub use link::{
    link_budget, link_rssi, throughput_of, InterfaceConfig, InterfaceKind, LinkBudget, LinkEnd, LinkEnvironment,
    LinkSample, Pointing, RadioError, RadioNode, THROUGHPUT_RAMP_DB,
};
pub use occlusion::{los_blocked, los_blocked_enu, Obstacle, ObstacleError, ObstacleMap};
pub use pattern::{antenna_gain, AntennaPattern};
pub use propagation::{path_loss, PathLoss, REFERENCE_DISTANCE_M};
pub use selection::{select_interface, Selection, SelectionPolicy};
