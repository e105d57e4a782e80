use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hash::{derive_seed, hash64};
use crate::trace::FlowKey;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CmsConfig {
    pub rows: usize,
    pub cols: usize,
    pub counter_bits: u32,
    pub seed: u64,
}

impl CmsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 {
            return Err(Error::invalid("rows", "must be >= 1"));
        }
        if self.cols == 0 {
            return Err(Error::invalid("cols", "must be >= 1"));
        }
        if self.counter_bits < 1 || self.counter_bits > 32 {
            return Err(Error::invalid("counter_bits", "must be in 1..=32"));
        }
        Ok(())
    }
}

/// Count-min sketch: each insert increments one counter per row, a query
/// takes the row minimum. Estimates never fall below the true count as long
/// as no counter saturates; counters clamp at `2^counter_bits - 1` instead of
/// wrapping, and a clamped counter can undercount.
pub struct CmSketch {
    config: CmsConfig,
    counters: Vec<u32>,
    row_seeds: Vec<u64>,
}

impl CmSketch {
    pub fn new(config: CmsConfig) -> Result<Self> {
        config.validate()?;
        Ok(CmSketch {
            counters: vec![0; config.rows * config.cols],
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

    fn counter_max(&self) -> u32 {
        ((1u64 << self.config.counter_bits) - 1).min(u32::MAX as u64) as u32
    }

    pub fn insert(&mut self, flow: FlowKey) {
        let max = self.counter_max();
        for row in 0..self.config.rows {
            let idx = self.index(row, flow);
            let c = &mut self.counters[idx];
            if *c < max {
                *c += 1;
            }
        }
    }

    pub fn query(&self, flow: FlowKey) -> u64 {
        (0..self.config.rows)
            .map(|row| self.counters[self.index(row, flow)])
            .min()
            .unwrap_or(0) as u64
    }

    pub fn memory_bits(&self) -> u64 {
        self.config.rows as u64 * self.config.cols as u64 * self.config.counter_bits as u64
    }

    pub fn config(&self) -> &CmsConfig {
        &self.config
    }
}
