//! Run orchestration: configuration files, trace persistence, seed
//! sweeps, and plot-data export.

pub mod trace;

pub use trace::{parse_trace, TraceRecord, SCHEMA_VERSION};
