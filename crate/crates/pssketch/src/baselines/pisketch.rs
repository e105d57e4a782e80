use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hash::{derive_seed, hash64};
use crate::report::ReportSet;
use crate::trace::{Criterion, FlowKey, FlowStats};

use super::Detector;

/// Weight-based persistent-item detector used as the head-to-head baseline.
///
/// Each cell tracks one flow with a weight: the flow's first packet in a
/// window raises the weight by `weight_increment` and its persistence count,
/// while every further packet in the same window lowers the weight by one,
/// so sparse persistent flows accumulate weight and dense flows burn it off.
/// A weight that reaches zero frees the cell. A packet of an untracked flow
/// claims an empty cell, or decrements the minimum-weight cell and takes it
/// when that hits zero. Per-window "first packet" detection runs through a
/// shared two-probe bit filter that is cleared at each boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PiSketchConfig {
    pub cells: usize,
    /// Weight gained on the first packet of a window (`L`); must be >= 2,
    /// one makes gains and losses indistinguishable.
    pub weight_increment: u32,
    /// Weight field width; the weight clamps at `2^weight_bits - 1`.
    pub weight_bits: u32,
    /// Width of the per-cell frequency and persistence counters (clamping).
    pub counter_bits: u32,
    /// Presence filter size in bits.
    pub filter_bits: usize,
    pub criterion: Criterion,
    pub seed: u64,
}

impl PiSketchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.cells == 0 {
            return Err(Error::invalid("cells", "must be >= 1"));
        }
        if self.weight_increment < 2 {
            return Err(Error::invalid(
                "weight_increment",
                "must be >= 2: an increment of 1 cancels against the per-packet decrement",
            ));
        }
        if self.weight_bits < 1 || self.weight_bits > 32 {
            return Err(Error::invalid("weight_bits", "must be in 1..=32"));
        }
        if self.counter_bits < 1 || self.counter_bits > 32 {
            return Err(Error::invalid("counter_bits", "must be in 1..=32"));
        }
        if self.filter_bits == 0 {
            return Err(Error::invalid("filter_bits", "must be >= 1"));
        }
        Ok(())
    }
}

/// Which query rule classifies cells as persistent-and-sparse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PiMode {
    /// Report cells whose weight meets a threshold.
    Weight(u32),
    /// Report cells meeting the persistence + density criterion.
    Density,
}

#[derive(Debug, Clone, Copy)]
struct PiCell {
    id: FlowKey,
    weight: u32,
    f: u64,
    p: u64,
}

pub struct PiSketch {
    config: PiSketchConfig,
    mode: PiMode,
    cells: Vec<Option<PiCell>>,
    index: HashMap<FlowKey, usize>,
    filter: Vec<u64>,
    filter_seeds: [u64; 2],
}

impl PiSketch {
    pub fn new(config: PiSketchConfig, mode: PiMode) -> Result<Self> {
        config.validate()?;
        Ok(PiSketch {
            cells: vec![None; config.cells],
            index: HashMap::new(),
            filter: vec![0u64; config.filter_bits.div_ceil(64)],
            filter_seeds: [derive_seed(config.seed, 0), derive_seed(config.seed, 1)],
            mode,
            config,
        })
    }

    pub fn config(&self) -> &PiSketchConfig {
        &self.config
    }

    pub fn mode(&self) -> PiMode {
        self.mode
    }

    /// Tests and sets the flow's presence marks; true if both were set.
    fn filter_check_and_set(&mut self, flow: FlowKey) -> bool {
        let mut seen = true;
        for seed in self.filter_seeds {
            let bit = (hash64(flow.0, seed) % self.config.filter_bits as u64) as usize;
            let (word, mask) = (bit / 64, 1u64 << (bit % 64));
            if self.filter[word] & mask == 0 {
                seen = false;
                self.filter[word] |= mask;
            }
        }
        seen
    }

    fn weight_max(&self) -> u32 {
        ((1u64 << self.config.weight_bits) - 1).min(u32::MAX as u64) as u32
    }

    fn counter_max(&self) -> u64 {
        (1u64 << self.config.counter_bits) - 1
    }

    fn claim(&mut self, slot: usize, flow: FlowKey) {
        self.cells[slot] = Some(PiCell {
            id: flow,
            weight: self.config.weight_increment.min(self.weight_max()),
            f: 1,
            p: 1,
        });
        self.index.insert(flow, slot);
    }

    fn free(&mut self, slot: usize) {
        if let Some(cell) = self.cells[slot].take() {
            self.index.remove(&cell.id);
        }
    }

    pub fn new_window(&mut self) {
        self.filter.iter_mut().for_each(|w| *w = 0);
    }

    pub fn insert(&mut self, flow: FlowKey) {
        let first_in_window = !self.filter_check_and_set(flow);
        if let Some(&slot) = self.index.get(&flow) {
            let wmax = self.weight_max();
            let cmax = self.counter_max();
            let cell = self.cells[slot].as_mut().expect("index points at free cell");
            cell.f = (cell.f + 1).min(cmax);
            if first_in_window {
                cell.weight = cell.weight.saturating_add(self.config.weight_increment).min(wmax);
                cell.p = (cell.p + 1).min(cmax);
            } else {
                cell.weight -= 1;
                if cell.weight == 0 {
                    self.free(slot);
                }
            }
            return;
        }
        if let Some(slot) = self.cells.iter().position(Option::is_none) {
            self.claim(slot, flow);
            return;
        }
        // Full: charge the weakest cell; take it if that empties it.
        let mut min_slot = 0;
        let mut min_weight = u32::MAX;
        for (slot, cell) in self.cells.iter().enumerate() {
            let w = cell.as_ref().expect("no empty cells here").weight;
            if w < min_weight {
                min_weight = w;
                min_slot = slot;
            }
        }
        let cell = self.cells[min_slot].as_mut().unwrap();
        cell.weight -= 1;
        if cell.weight == 0 {
            self.free(min_slot);
            self.claim(min_slot, flow);
        }
    }

    /// Reports every tracked cell; the PS subset is chosen by `mode`.
    pub fn query_mode(&self, mode: PiMode) -> ReportSet {
        let mut report = ReportSet::default();
        for cell in self.cells.iter().flatten() {
            let stats = FlowStats {
                frequency: cell.f,
                persistence: cell.p,
            };
            report.stats.insert(cell.id, stats);
            let is_ps = match mode {
                PiMode::Weight(threshold) => cell.weight >= threshold,
                PiMode::Density => self.config.criterion.matches(&stats),
            };
            if is_ps {
                report.ps.insert(cell.id);
            }
        }
        report
    }

    /// Largest weight currently stored; bounds a weight-threshold sweep.
    pub fn max_weight(&self) -> u32 {
        self.cells
            .iter()
            .flatten()
            .map(|c| c.weight)
            .max()
            .unwrap_or(0)
    }

    /// Live `(flow, weight)` pairs, for weight-threshold sweeps.
    pub fn live_weights(&self) -> impl Iterator<Item = (FlowKey, u32)> + '_ {
        self.cells.iter().flatten().map(|c| (c.id, c.weight))
    }

    pub fn memory_bits(&self) -> u64 {
        self.config.cells as u64
            * (64 + self.config.weight_bits as u64 + 2 * self.config.counter_bits as u64)
            + self.config.filter_bits as u64
    }
}

impl Detector for PiSketch {
    fn name(&self) -> &'static str {
        match self.mode {
            PiMode::Weight(_) => "pisketch",
            PiMode::Density => "pisketch-density",
        }
    }

    fn new_window(&mut self) {
        PiSketch::new_window(self);
    }

    fn insert(&mut self, flow: FlowKey) {
        PiSketch::insert(self, flow);
    }

    fn query(&self) -> ReportSet {
        self.query_mode(self.mode)
    }

    fn memory_bits(&self) -> u64 {
        PiSketch::memory_bits(self)
    }
}
