//! Monitor synthesis: compiling properties into online monitors and
//! program-graph renderings.

pub mod graph;
pub mod runtime;
pub mod spec;

pub use graph::synthesize;
pub use runtime::{attach_all, Monitor, MonitorVerdict};
pub use spec::{compile, MonitorSpec};
