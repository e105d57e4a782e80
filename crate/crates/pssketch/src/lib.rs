//! Streaming detection of persistent-and-sparse flows.
//!
//! A flow is *persistent* when it shows up in many time windows and *sparse*
//! when it sends few packets per window of presence; flows that are both at
//! once (low-and-slow scanners, beaconing hosts) are the detection target.
//! This crate provides:
//!
//! - [`PsSketch`]: a two-layer sketch that finds such flows in bounded
//!   memory (module [`sketch`]),
//! - baseline detectors sharing one interface (module [`baselines`]),
//! - exact counting and the trace text format (module [`trace`]),
//! - a Poisson-model trace generator with closed-form statistics and their
//!   Monte-Carlo validators (module [`synth`]),
//! - scoring, throughput measurement, parameter sweeps, and distribution
//!   reports (module [`eval`]).

pub mod baselines;
pub mod error;
pub mod eval;
pub mod hash;
pub mod report;
pub mod sketch;
pub mod synth;
pub mod trace;

pub use error::{Error, Result};
pub use report::ReportSet;
pub use sketch::{InsertOutcome, PsSketch, SketchConfig, WidthConfig};
pub use trace::{Criterion, FlowKey, FlowStats, PacketRecord, WindowedTrace};
