use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::report::ReportSet;
use crate::trace::{Criterion, FlowKey, FlowStats};

use super::{CmSketch, CmsConfig, Detector, OoSketch, OosConfig};

/// Composition baseline: a count-min for frequency, an on-off sketch for
/// persistence, and a bounded candidate list. A flow becomes a candidate the
/// first time its persistence estimate reaches `p0`; a full list drops new
/// candidates. Queries re-estimate every candidate and apply the criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrawmanConfig {
    pub cms: CmsConfig,
    pub oos: OosConfig,
    pub candidate_capacity: usize,
}

impl StrawmanConfig {
    pub fn validate(&self) -> Result<()> {
        self.cms.validate()?;
        self.oos.validate()?;
        if self.candidate_capacity == 0 {
            return Err(Error::invalid("candidate_capacity", "must be >= 1"));
        }
        Ok(())
    }
}

pub struct Strawman {
    criterion: Criterion,
    cms: CmSketch,
    oos: OoSketch,
    candidates: HashSet<FlowKey>,
    capacity: usize,
    dropped_candidates: u64,
}

impl Strawman {
    pub fn new(config: StrawmanConfig, criterion: Criterion) -> Result<Self> {
        config.validate()?;
        Ok(Strawman {
            criterion,
            cms: CmSketch::new(config.cms)?,
            oos: OoSketch::new(config.oos)?,
            candidates: HashSet::new(),
            capacity: config.candidate_capacity,
            dropped_candidates: 0,
        })
    }

    /// Candidates whose admission was refused because the list was full.
    pub fn dropped_candidates(&self) -> u64 {
        self.dropped_candidates
    }
}

impl Detector for Strawman {
    fn name(&self) -> &'static str {
        "strawman"
    }

    fn new_window(&mut self) {
        self.oos.new_window();
    }

    fn insert(&mut self, flow: FlowKey) {
        self.cms.insert(flow);
        self.oos.insert(flow);
        if !self.candidates.contains(&flow) && self.oos.query(flow) >= self.criterion.p0 {
            if self.candidates.len() < self.capacity {
                self.candidates.insert(flow);
            } else {
                self.dropped_candidates += 1;
            }
        }
    }

    fn query(&self) -> ReportSet {
        let mut report = ReportSet::default();
        for &flow in &self.candidates {
            let stats = FlowStats {
                frequency: self.cms.query(flow),
                persistence: self.oos.query(flow),
            };
            report.stats.insert(flow, stats);
            if self.criterion.matches(&stats) {
                report.ps.insert(flow);
            }
        }
        report
    }

    fn memory_bits(&self) -> u64 {
        self.cms.memory_bits() + self.oos.memory_bits() + self.capacity as u64 * 64
    }
}
