//! Scenario loading, the fixed-step engine and trace output.

mod engine;
pub mod rng;
mod scenario;
mod trace;

pub use engine::{run, Engine, Route, SimAbort, SimError};
pub use scenario::*;
pub use trace::{Format, Trace, TraceError, TraceMeta, TraceRecord, COLUMNS};
