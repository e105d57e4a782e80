use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::Criterion;

/// Bit widths of the packed counters.
///
/// The competition layer stores, per entry, a fingerprint plus short
/// frequency / persistence counters and two flag bits; the protection layer
/// extends the counters of admitted flows with wider overflow counts. A
/// counter of width `b` holds values `0..2^b`; reaching the top triggers an
/// overflow report (or elimination) rather than wrapping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct WidthConfig {
    /// Fingerprint width in bits; the value 0 is reserved for empty slots.
    pub fingerprint_bits: u32,
    /// Per-entry frequency counter width (counts packets).
    pub frequency_bits: u32,
    /// Per-entry persistence counter width (counts windows of presence).
    pub persistence_bits: u32,
    /// Protection-layer frequency overflow counter width.
    pub freq_overflow_bits: u32,
    /// Protection-layer persistence overflow counter width.
    pub pers_overflow_bits: u32,
    /// Persistence value at which an overflow is reported. Defaults to the
    /// full counter range `2^persistence_bits`; it may be lowered (typically
    /// to the reporting threshold `p0`) so that protection aligns with the
    /// persistence criterion.
    pub p_overflow_threshold: u32,
}

impl Default for WidthConfig {
    fn default() -> Self {
        WidthConfig {
            fingerprint_bits: 16,
            frequency_bits: 8,
            persistence_bits: 6,
            freq_overflow_bits: 8,
            pers_overflow_bits: 8,
            p_overflow_threshold: 64,
        }
    }
}

impl WidthConfig {
    pub fn validate(&self) -> Result<()> {
        let in_range = |name, value: u32, lo: u32, hi: u32| {
            if value < lo || value > hi {
                Err(Error::invalid(name, format!("{value} outside {lo}..={hi}")))
            } else {
                Ok(())
            }
        };
        in_range("fingerprint_bits", self.fingerprint_bits, 1, 32)?;
        in_range("frequency_bits", self.frequency_bits, 1, 16)?;
        in_range("persistence_bits", self.persistence_bits, 1, 16)?;
        in_range("freq_overflow_bits", self.freq_overflow_bits, 1, 16)?;
        in_range("pers_overflow_bits", self.pers_overflow_bits, 1, 16)?;
        let p_cap = 1u32 << self.persistence_bits;
        in_range("p_overflow_threshold", self.p_overflow_threshold, 2, p_cap)?;
        Ok(())
    }

    /// Frequency value that triggers overflow handling (`2^frequency_bits`).
    pub fn frequency_limit(&self) -> u32 {
        1u32 << self.frequency_bits
    }

    /// Bits per competition-layer entry: fingerprint, both counters, 2 flags.
    pub fn competition_entry_bits(&self) -> u64 {
        (self.fingerprint_bits + self.frequency_bits + self.persistence_bits + 2) as u64
    }

    /// Bits per protection-layer entry: full 64-bit id plus overflow counters.
    pub fn protection_entry_bits(&self) -> u64 {
        (64 + self.freq_overflow_bits + self.pers_overflow_bits) as u64
    }

    pub fn freq_overflow_max(&self) -> u32 {
        (1u32 << self.freq_overflow_bits) - 1
    }

    pub fn pers_overflow_max(&self) -> u32 {
        (1u32 << self.pers_overflow_bits) - 1
    }

    /// Largest frequency representable across both layers:
    /// `(2^freq_overflow_bits - 1) * (2^frequency_bits - 1)`.
    pub fn max_frequency(&self) -> u64 {
        self.freq_overflow_max() as u64 * ((1u64 << self.frequency_bits) - 1)
    }

    /// Largest persistence representable across both layers:
    /// `(2^pers_overflow_bits - 1) * (2^persistence_bits - 1)`.
    pub fn max_persistence(&self) -> u64 {
        self.pers_overflow_max() as u64 * ((1u64 << self.persistence_bits) - 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SketchConfig {
    /// Competition-layer bucket count (X).
    pub buckets: usize,
    /// Entries per bucket (Y).
    pub bucket_width: usize,
    /// Protection-layer capacity (R).
    pub protected_capacity: usize,
    pub widths: WidthConfig,
    pub criterion: Criterion,
    pub hash_seed: u64,
    pub rng_seed: u64,
    /// Cap frequency-overflow growth at two reports per flow per window.
    pub burst_elimination: bool,
    /// Drop protected flows whose overflow counters reveal excess density.
    pub prune_enabled: bool,
}

impl Default for SketchConfig {
    fn default() -> Self {
        SketchConfig {
            buckets: 1000,
            bucket_width: 32,
            protected_capacity: 500,
            widths: WidthConfig::default(),
            criterion: Criterion { p0: 50, d0: 1.2 },
            hash_seed: 0x5055_5348,
            rng_seed: 1,
            burst_elimination: true,
            prune_enabled: true,
        }
    }
}

impl SketchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.buckets == 0 {
            return Err(Error::invalid("buckets", "must be >= 1"));
        }
        if self.bucket_width == 0 {
            return Err(Error::invalid("bucket_width", "must be >= 1"));
        }
        if self.protected_capacity == 0 {
            return Err(Error::invalid("protected_capacity", "must be >= 1"));
        }
        self.widths.validate()?;
        // Re-validate thresholds: configs may arrive via deserialization.
        Criterion::new(self.criterion.p0, self.criterion.d0)?;
        Ok(())
    }

    /// Total footprint in bits:
    /// `X*Y*(competition entry bits) + R*(protection entry bits)`.
    pub fn memory_bits(&self) -> u64 {
        self.buckets as u64 * self.bucket_width as u64 * self.widths.competition_entry_bits()
            + self.protected_capacity as u64 * self.widths.protection_entry_bits()
    }

    /// Largest (frequency, persistence) pair the two layers can represent.
    pub fn max_storable(&self) -> (u64, u64) {
        (self.widths.max_frequency(), self.widths.max_persistence())
    }
}
