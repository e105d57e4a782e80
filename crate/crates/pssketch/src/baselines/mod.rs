//! Baseline detectors and the common detector interface.
//!
//! Every detector consumes the same windowed stream — `new_window` at each
//! boundary, `insert` per packet — and answers `query` with a [`ReportSet`].

mod cms;
mod oos;
mod pisketch;
mod space;
mod strawman;

pub use cms::{CmSketch, CmsConfig};
pub use oos::{OoSketch, OosConfig};
pub use pisketch::{PiMode, PiSketch, PiSketchConfig};
pub use space::{pisketch_equal_space_max_persistence, pisketch_space_bits};
pub use strawman::{Strawman, StrawmanConfig};

use std::collections::HashMap;

use crate::report::ReportSet;
use crate::sketch::PsSketch;
use crate::trace::{Criterion, FlowKey, FlowStats, WindowedTrace};

pub trait Detector {
    fn name(&self) -> &'static str;
    /// Marks a window boundary; called between windows, not before the first.
    fn new_window(&mut self);
    fn insert(&mut self, flow: FlowKey);
    fn query(&self) -> ReportSet;
    /// Accounted footprint in bits (0 for the unbounded reference).
    fn memory_bits(&self) -> u64;
}

/// Feeds a trace to a detector, emitting one `new_window` per skipped or
/// advanced window index.
pub fn run_trace<D: Detector + ?Sized>(detector: &mut D, trace: &WindowedTrace) {
    let mut window = 0u64;
    for rec in trace.records() {
        while window < rec.window {
            detector.new_window();
            window += 1;
        }
        detector.insert(rec.flow);
    }
}

impl Detector for PsSketch {
    fn name(&self) -> &'static str {
        "pssketch"
    }

    fn new_window(&mut self) {
        PsSketch::new_window(self);
    }

    fn insert(&mut self, flow: FlowKey) {
        PsSketch::insert(self, flow);
    }

    fn query(&self) -> ReportSet {
        PsSketch::query(self)
    }

    fn memory_bits(&self) -> u64 {
        PsSketch::memory_bits(self)
    }
}

/// Exact-counting reference detector: unbounded per-flow totals.
pub struct ExactDetector {
    criterion: Criterion,
    stats: HashMap<FlowKey, FlowStats>,
    last_window: HashMap<FlowKey, u64>,
    window: u64,
}

impl ExactDetector {
    pub fn new(criterion: Criterion) -> Self {
        ExactDetector {
            criterion,
            stats: HashMap::new(),
            last_window: HashMap::new(),
            window: 0,
        }
    }
}

impl Detector for ExactDetector {
    fn name(&self) -> &'static str {
        "exact"
    }

    fn new_window(&mut self) {
        self.window += 1;
    }

    fn insert(&mut self, flow: FlowKey) {
        let entry = self.stats.entry(flow).or_default();
        entry.frequency += 1;
        if self.last_window.insert(flow, self.window) != Some(self.window) {
            entry.persistence += 1;
        }
    }

    fn query(&self) -> ReportSet {
        let mut report = ReportSet::default();
        for (&flow, &stats) in &self.stats {
            report.stats.insert(flow, stats);
            if self.criterion.matches(&stats) {
                report.ps.insert(flow);
            }
        }
        report
    }

    fn memory_bits(&self) -> u64 {
        0
    }
}
