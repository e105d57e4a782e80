use crate::error::Result;
use crate::hash::{derive_seed, hash64};
use crate::trace::FlowKey;

pub type OosConfig = super::CmsConfig;

/// On-off persistence sketch: a count-min grid where each counter carries an
/// "already incremented this window" bit, so per window a counter moves at
/// most once. The row minimum therefore upper-bounds a flow's true
/// persistence (subject to the same saturation caveat as the count-min).
pub struct OoSketch {
    config: OosConfig,
    counters: Vec<u32>,
    touched: Vec<bool>,
    row_seeds: Vec<u64>,
}

impl OoSketch {
    pub fn new(config: OosConfig) -> Result<Self> {
        config.validate()?;
        Ok(OoSketch {
            counters: vec![0; config.rows * config.cols],
            touched: vec![false; config.rows * config.cols],
            row_seeds: (0..config.rows as u64)
                .map(|i| derive_seed(config.seed, i))
                .collect(),
            config,
        })
    }

    #[inline]
    fn index(&self, row: usize, flow: FlowKey) -> usize {
        row * self.config.cols + (hash64(flow.0, self.row_seeds[row]) % self.config.cols as u64) as usize
    }

    pub fn new_window(&mut self) {
        self.touched.iter_mut().for_each(|t| *t = false);
    }

    pub fn insert(&mut self, flow: FlowKey) {
        let max = ((1u64 << self.config.counter_bits) - 1).min(u32::MAX as u64) as u32;
        for row in 0..self.config.rows {
            let idx = self.index(row, flow);
            if !self.touched[idx] {
                self.touched[idx] = true;
                if self.counters[idx] < max {
                    self.counters[idx] += 1;
                }
            }
        }
    }

    pub fn query(&self, flow: FlowKey) -> u64 {
        (0..self.config.rows)
            .map(|row| self.counters[self.index(row, flow)])
            .min()
            .unwrap_or(0) as u64
    }

    /// Counter bits plus the on-off bit per cell.
    pub fn memory_bits(&self) -> u64 {
        self.config.rows as u64 * self.config.cols as u64 * (self.config.counter_bits as u64 + 1)
    }

    pub fn config(&self) -> &OosConfig {
        &self.config
    }
}
