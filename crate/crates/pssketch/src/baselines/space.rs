//! Analytic space comparisons between the weight-based baseline and the
//! two-layer sketch's counter ranges.

use crate::error::{Error, Result};
use crate::sketch::WidthConfig;

/// Bits a cell array needs to cover the same frequency and persistence
/// ranges as the two-layer counters: each of `cells` cells stores a full
/// flow id, a weight wide enough for `weight_increment` times the combined
/// frequency range (`ceil(log2(L) * (freq_overflow_bits + frequency_bits))`),
/// and a persistence counter covering the combined persistence range
/// (`pers_overflow_bits + persistence_bits`).
pub fn pisketch_space_bits(
    cells: u64,
    flow_id_bits: u32,
    weight_increment: u32,
    widths: &WidthConfig,
) -> Result<u64> {
    if weight_increment < 2 {
        return Err(Error::invalid("weight_increment", "must be >= 2"));
    }
    let weight_term = ((weight_increment as f64).log2()
        * (widths.freq_overflow_bits + widths.frequency_bits) as f64)
        .ceil() as u64;
    let persistence_term = (widths.pers_overflow_bits + widths.persistence_bits) as u64;
    Ok(cells * (flow_id_bits as u64 + weight_term + persistence_term))
}

/// Largest persistence a single-counter cell can hold when its counter gets
/// only the residual width (`2^persistence_bits - 1`): the ceiling the
/// baseline hits without an overflow layer at equal space.
pub fn pisketch_equal_space_max_persistence(widths: &WidthConfig) -> u64 {
    (1u64 << widths.persistence_bits) - 1
}
