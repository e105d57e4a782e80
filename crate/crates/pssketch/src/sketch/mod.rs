//! Two-layer sketch for persistent-and-sparse flow detection.
//!
//! The competition layer (CL) is a bucket array of narrow entries where
//! unprotected flows fight for slots: a flow whose frequency counter fills up
//! while unprotected is too dense and is eliminated outright, while a flow
//! whose persistence counter fills up first has proven itself persistent and
//! is admitted to the protection layer (PL). The PL stores the full flow id
//! plus wide overflow counters; once admitted, a flow's CL entry is immune to
//! contention and its counter overflows roll into the PL, so large values are
//! represented as `overflow_count * limit + residual` across the layers.

mod config;

pub use config::{SketchConfig, WidthConfig};

use std::collections::{BTreeSet, HashMap};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::hash::hash64;
use crate::report::ReportSet;
use crate::trace::{FlowKey, FlowStats};

/// One competition-layer slot. `fp == 0` marks an empty slot; real
/// fingerprints are remapped away from zero.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CompetitionEntry {
    pub fp: u32,
    pub f: u32,
    pub p: u32,
    /// Set on the flow's first packet in the current window.
    pub flag_w: bool,
    /// Set once the flow is protected; overflow reports go to the PL.
    pub flag_of: bool,
}

impl CompetitionEntry {
    fn fresh(fp: u32) -> Self {
        CompetitionEntry {
            fp,
            f: 1,
            p: 1,
            flag_w: true,
            flag_of: false,
        }
    }

    fn is_empty(&self) -> bool {
        self.fp == 0
    }
}

/// Protection-layer record for one admitted flow (keyed by full id).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProtectionEntry {
    pub f_of: u32,
    pub p_of: u32,
    /// Frequency-overflow reports accepted this window (burst elimination).
    pub window_increments: u8,
}

struct CompetitionLayer {
    width: usize,
    entries: Vec<CompetitionEntry>,
}

impl CompetitionLayer {
    fn new(buckets: usize, width: usize) -> Self {
        CompetitionLayer {
            width,
            entries: vec![CompetitionEntry::default(); buckets * width],
        }
    }

    #[inline]
    fn entry(&self, bucket: usize, slot: usize) -> &CompetitionEntry {
        &self.entries[bucket * self.width + slot]
    }

    #[inline]
    fn entry_mut(&mut self, bucket: usize, slot: usize) -> &mut CompetitionEntry {
        &mut self.entries[bucket * self.width + slot]
    }

    fn clear_entry(&mut self, bucket: usize, slot: usize) {
        *self.entry_mut(bucket, slot) = CompetitionEntry::default();
    }

    fn bucket(&self, bucket: usize) -> &[CompetitionEntry] {
        &self.entries[bucket * self.width..(bucket + 1) * self.width]
    }
}

/// Result of one bucket scan: matching slot, first empty slot, and the
/// lowest-persistence unprotected slot (ties keep the lowest index). All
/// three are produced by a single pass over the bucket.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct BucketScan {
    matched: Option<usize>,
    first_empty: Option<usize>,
    min_unprotected: Option<usize>,
}

fn scan_bucket(entries: &[CompetitionEntry], fp: u32) -> BucketScan {
    let mut matched = None;
    let mut first_empty = None;
    let mut min_unprotected: Option<usize> = None;
    let mut min_p = u32::MAX;
    for (slot, e) in entries.iter().enumerate() {
        if e.is_empty() {
            if first_empty.is_none() {
                first_empty = Some(slot);
            }
            continue;
        }
        if e.fp == fp && matched.is_none() {
            matched = Some(slot);
        }
        if !e.flag_of && e.p < min_p {
            min_p = e.p;
            min_unprotected = Some(slot);
        }
    }
    BucketScan {
        matched,
        first_empty,
        min_unprotected,
    }
}

/// Reference implementation of the bucket scan as three independent passes;
/// kept for differential testing against the single-pass scan.
fn scan_bucket_naive(entries: &[CompetitionEntry], fp: u32) -> BucketScan {
    let matched = entries
        .iter()
        .position(|e| !e.is_empty() && e.fp == fp);
    let first_empty = entries.iter().position(|e| e.is_empty());
    let mut min_unprotected = None;
    let mut best = u32::MAX;
    for (slot, e) in entries.iter().enumerate() {
        if !e.is_empty() && !e.flag_of && e.p < best {
            best = e.p;
            min_unprotected = Some(slot);
        }
    }
    BucketScan {
        matched,
        first_empty,
        min_unprotected,
    }
}

/// What an insert did with the packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum InsertOutcome {
    /// Counters of an existing entry advanced.
    Updated,
    /// The flow took an empty slot.
    Created,
    /// The flow won a contention and replaced the weakest entry.
    Replaced,
    /// The packet was discarded (lost contention, or no slot to fight for).
    Dropped,
    /// An unprotected flow exhausted its frequency counter and was removed
    /// as too dense.
    Eliminated,
    /// The flow's persistence filled up and it was admitted to the
    /// protection layer.
    Protected,
    /// A protected flow revealed excess density (or saturated its overflow
    /// counters) and was removed from both layers.
    Pruned,
}

/// Outcome of reporting an overflow to the protection layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ProtectOutcome {
    Created,
    Updated,
    EvictedOther,
    PrunedSelf,
    SaturatedRemoved,
    CreationDropped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum OverflowKind {
    Frequency,
    Persistence,
}

/// Event counters for paths that are invisible in insert outcomes alone.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Diagnostics {
    pub eliminated: u64,
    pub replaced: u64,
    pub dropped_contention: u64,
    pub dropped_all_protected: u64,
    pub admissions: u64,
    pub pl_evictions: u64,
    pub pruned: u64,
    pub burst_suppressed: u64,
    /// Frequency overflows with no protection record (fingerprint-collision
    /// orphans); dropped rather than forging a record.
    pub orphan_frequency_reports: u64,
    /// Admissions abandoned because every eviction candidate shared the
    /// admitting flow's own competition entry.
    pub admission_drops: u64,
    pub saturation_removals: u64,
}

/// Copy of the full sketch state for dumps, goldens, and invariant checks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SketchSnapshot {
    /// Non-empty competition entries as (bucket, slot, entry), in layout order.
    pub competition: Vec<(usize, usize, CompetitionEntry)>,
    /// Protection entries sorted by flow id.
    pub protection: Vec<(FlowKey, ProtectionEntry)>,
    pub window_index: u64,
}

pub struct PsSketch {
    config: SketchConfig,
    cl: CompetitionLayer,
    pl: HashMap<FlowKey, ProtectionEntry>,
    /// Flows that saturated their persistence overflow counter: they proved
    /// maximal persistence, so their final stats are kept for reporting even
    /// though the layers no longer track them.
    saturated: Vec<(FlowKey, FlowStats)>,
    window_index: u64,
    rng: ChaCha8Rng,
    diagnostics: Diagnostics,
}

impl PsSketch {
    pub fn new(config: SketchConfig) -> Result<Self> {
        config.validate()?;
        Ok(PsSketch {
            cl: CompetitionLayer::new(config.buckets, config.bucket_width),
            pl: HashMap::new(),
            saturated: Vec::new(),
            window_index: 0,
            rng: ChaCha8Rng::seed_from_u64(config.rng_seed),
            diagnostics: Diagnostics::default(),
            config,
        })
    }

    pub fn config(&self) -> &SketchConfig {
        &self.config
    }

    pub fn window_index(&self) -> u64 {
        self.window_index
    }

    pub fn diagnostics(&self) -> &Diagnostics {
        &self.diagnostics
    }

    pub fn memory_bits(&self) -> u64 {
        self.config.memory_bits()
    }

    /// Fingerprint of a flow: the hash truncated to the configured width,
    /// with 0 remapped to 1 so it cannot impersonate an empty slot.
    pub fn fingerprint(&self, flow: FlowKey) -> u32 {
        let mask = (1u64 << self.config.widths.fingerprint_bits) - 1;
        let h = hash64(flow.0, self.config.hash_seed) & mask;
        if h == 0 {
            1
        } else {
            h as u32
        }
    }

    /// Bucket addressed by a fingerprint.
    pub fn bucket_of(&self, fp: u32) -> usize {
        fp as usize % self.config.buckets
    }

    /// Starts the next window: per-window presence flags and per-window
    /// overflow-report budgets reset; totals are untouched.
    pub fn new_window(&mut self) {
        for e in &mut self.cl.entries {
            e.flag_w = false;
        }
        for entry in self.pl.values_mut() {
            entry.window_increments = 0;
        }
        self.window_index += 1;
    }

    pub fn insert(&mut self, flow: FlowKey) -> InsertOutcome {
        let fp = self.fingerprint(flow);
        let bucket = self.bucket_of(fp);
        let scan = scan_bucket(self.cl.bucket(bucket), fp);
        if let Some(slot) = scan.matched {
            self.update_entry(bucket, slot, flow)
        } else if let Some(slot) = scan.first_empty {
            *self.cl.entry_mut(bucket, slot) = CompetitionEntry::fresh(fp);
            InsertOutcome::Created
        } else {
            self.contend(bucket, scan.min_unprotected, fp)
        }
    }

    /// Advances the counters of the entry the flow hashed to, handling
    /// counter exhaustion: unprotected flows are eliminated (frequency) or
    /// admitted (persistence); protected flows roll the overflow into the PL.
    fn update_entry(&mut self, bucket: usize, slot: usize, flow: FlowKey) -> InsertOutcome {
        let f_limit = self.config.widths.frequency_limit();
        let p_limit = self.config.widths.p_overflow_threshold;
        {
            let e = self.cl.entry_mut(bucket, slot);
            if !e.flag_w {
                e.p += 1;
                e.flag_w = true;
            }
            e.f += 1;
        }
        let e = *self.cl.entry(bucket, slot);

        if !e.flag_of {
            if e.f >= f_limit {
                // Filling the frequency counter before the persistence counter
                // means density > f_limit / p_threshold: not a sparse flow.
                self.cl.clear_entry(bucket, slot);
                self.diagnostics.eliminated += 1;
                return InsertOutcome::Eliminated;
            }
            if e.p >= p_limit {
                return match self.protect(flow, OverflowKind::Persistence, (bucket, slot)) {
                    ProtectOutcome::Created | ProtectOutcome::EvictedOther => {
                        let e = self.cl.entry_mut(bucket, slot);
                        e.flag_of = true;
                        e.p = 0;
                        InsertOutcome::Protected
                    }
                    ProtectOutcome::CreationDropped => {
                        // No protection slot could be freed; the flow cannot
                        // be carried forward, so it leaves the sketch whole.
                        self.cl.clear_entry(bucket, slot);
                        InsertOutcome::Dropped
                    }
                    other => {
                        // A PL record for an unprotected entry would mean the
                        // layers disagree.
                        debug_assert!(false, "unexpected admission outcome {other:?}");
                        let e = self.cl.entry_mut(bucket, slot);
                        e.flag_of = true;
                        e.p = 0;
                        InsertOutcome::Protected
                    }
                };
            }
            return InsertOutcome::Updated;
        }

        if e.f >= f_limit {
            match self.protect(flow, OverflowKind::Frequency, (bucket, slot)) {
                ProtectOutcome::PrunedSelf | ProtectOutcome::SaturatedRemoved => {
                    let e = self.cl.entry_mut(bucket, slot);
                    e.f = 0;
                    if e.p >= p_limit {
                        // The same packet also crossed the persistence
                        // threshold, but its flow just left the PL; with
                        // nobody to credit, the crossing is consumed here.
                        e.p = 0;
                    }
                    self.release_entry(bucket, slot);
                    return InsertOutcome::Pruned;
                }
                _ => self.cl.entry_mut(bucket, slot).f = 0,
            }
        }
        if self.cl.entry(bucket, slot).p >= p_limit {
            match self.protect(flow, OverflowKind::Persistence, (bucket, slot)) {
                ProtectOutcome::SaturatedRemoved => {
                    self.cl.entry_mut(bucket, slot).p = 0;
                    self.release_entry(bucket, slot);
                    return InsertOutcome::Pruned;
                }
                _ => self.cl.entry_mut(bucket, slot).p = 0,
            }
        }
        InsertOutcome::Updated
    }

    /// Contention for a full bucket: the arriving flow challenges the
    /// lowest-persistence unprotected entry and wins with probability
    /// `1 / p_min`. Protected entries never take part.
    fn contend(&mut self, bucket: usize, min_slot: Option<usize>, fp: u32) -> InsertOutcome {
        let Some(slot) = min_slot else {
            self.diagnostics.dropped_all_protected += 1;
            return InsertOutcome::Dropped;
        };
        let challenged = *self.cl.entry(bucket, slot);
        debug_assert!(!challenged.flag_of && challenged.p >= 1);
        let u: f64 = self.rng.random();
        if u < 1.0 / challenged.p as f64 {
            *self.cl.entry_mut(bucket, slot) = CompetitionEntry::fresh(fp);
            self.diagnostics.replaced += 1;
            InsertOutcome::Replaced
        } else {
            self.diagnostics.dropped_contention += 1;
            InsertOutcome::Dropped
        }
    }

    /// Reports a counter overflow of `flow` (whose CL entry is `origin`) to
    /// the protection layer, admitting the flow on its first persistence
    /// overflow.
    fn protect(
        &mut self,
        flow: FlowKey,
        kind: OverflowKind,
        origin: (usize, usize),
    ) -> ProtectOutcome {
        let widths = self.config.widths;
        if let Some(entry) = self.pl.get_mut(&flow) {
            match kind {
                OverflowKind::Frequency => {
                    if self.config.burst_elimination && entry.window_increments >= 2 {
                        // Within one window at most two frequency overflows
                        // count; a burst beyond that is ignored.
                        self.diagnostics.burst_suppressed += 1;
                        return ProtectOutcome::Updated;
                    }
                    if entry.f_of >= widths.freq_overflow_max() {
                        self.pl.remove(&flow);
                        self.diagnostics.saturation_removals += 1;
                        return ProtectOutcome::SaturatedRemoved;
                    }
                    entry.f_of += 1;
                    entry.window_increments = entry.window_increments.saturating_add(1);
                    if self.config.prune_enabled && entry.f_of > entry.p_of {
                        let (f_of, p_of) = (entry.f_of, entry.p_of);
                        self.pl.remove(&flow);
                        self.diagnostics.pruned += 1;
                        self.assert_prune_density(f_of, p_of, origin);
                        return ProtectOutcome::PrunedSelf;
                    }
                    ProtectOutcome::Updated
                }
                OverflowKind::Persistence => {
                    if entry.p_of >= widths.pers_overflow_max() {
                        // The flow has proven the largest persistence the
                        // counters can express; keep its final stats, then
                        // stop tracking it.
                        let frozen = *entry;
                        let stats = self.reconstruct(&frozen, origin);
                        self.saturated.push((flow, stats));
                        self.pl.remove(&flow);
                        self.diagnostics.saturation_removals += 1;
                        return ProtectOutcome::SaturatedRemoved;
                    }
                    entry.p_of += 1;
                    ProtectOutcome::Updated
                }
            }
        } else {
            match kind {
                OverflowKind::Frequency => {
                    // A frequency overflow for a flow the PL does not know:
                    // a fingerprint-collision sibling of a protected flow.
                    // Forging a record would start at f_of > p_of and be
                    // pruned immediately, so the report is dropped instead.
                    self.diagnostics.orphan_frequency_reports += 1;
                    ProtectOutcome::Updated
                }
                OverflowKind::Persistence => self.admit(flow, origin),
            }
        }
    }

    /// Admits a flow to the protection layer, evicting the densest protected
    /// flow when full. Candidates sharing the admitting flow's own CL entry
    /// are skipped: clearing that entry would orphan the new record.
    fn admit(&mut self, flow: FlowKey, origin: (usize, usize)) -> ProtectOutcome {
        if self.pl.len() < self.config.protected_capacity {
            self.pl.insert(
                flow,
                ProtectionEntry {
                    f_of: 0,
                    p_of: 1,
                    window_increments: 0,
                },
            );
            self.diagnostics.admissions += 1;
            return ProtectOutcome::Created;
        }

        let mut victim: Option<(FlowKey, (usize, usize), f64)> = None;
        for (&id, entry) in &self.pl {
            let Some(coords) = self.locate_protected(id) else {
                debug_assert!(false, "protected flow {id} has no competition entry");
                continue;
            };
            if coords == origin {
                continue;
            }
            let stats = self.reconstruct(entry, coords);
            // p_of >= 1 while the record exists, so persistence is nonzero.
            let density = stats.frequency as f64 / stats.persistence as f64;
            let better = match victim {
                None => true,
                Some((vid, _, vd)) => density > vd || (density == vd && id < vid),
            };
            if better {
                victim = Some((id, coords, density));
            }
        }
        let Some((vid, vcoords, _)) = victim else {
            self.diagnostics.admission_drops += 1;
            return ProtectOutcome::CreationDropped;
        };
        self.pl.remove(&vid);
        self.release_entry(vcoords.0, vcoords.1);
        self.pl.insert(
            flow,
            ProtectionEntry {
                f_of: 0,
                p_of: 1,
                window_increments: 0,
            },
        );
        self.diagnostics.admissions += 1;
        self.diagnostics.pl_evictions += 1;
        ProtectOutcome::EvictedOther
    }

    /// Clears a competition entry whose protected flow just left the PL —
    /// unless another protected flow (a fingerprint-collision sibling) still
    /// locates to it, in which case the entry keeps serving that sibling.
    fn release_entry(&mut self, bucket: usize, slot: usize) {
        let fp = self.cl.entry(bucket, slot).fp;
        let backed = self.pl.keys().any(|&id| self.fingerprint(id) == fp);
        if !backed {
            self.cl.clear_entry(bucket, slot);
        }
    }

    /// Finds the CL entry of a protected flow via its fingerprint.
    fn locate_protected(&self, flow: FlowKey) -> Option<(usize, usize)> {
        let fp = self.fingerprint(flow);
        let bucket = self.bucket_of(fp);
        let slot = self
            .cl
            .bucket(bucket)
            .iter()
            .position(|e| !e.is_empty() && e.fp == fp)?;
        Some((bucket, slot))
    }

    /// Combines PL overflow counts with CL residuals:
    /// `f = f_of * 2^frequency_bits + f_residual`,
    /// `p = p_of * p_overflow_threshold + p_residual`.
    fn reconstruct(&self, entry: &ProtectionEntry, coords: (usize, usize)) -> FlowStats {
        let widths = &self.config.widths;
        let e = self.cl.entry(coords.0, coords.1);
        FlowStats {
            frequency: entry.f_of as u64 * (1u64 << widths.frequency_bits) + e.f as u64,
            persistence: entry.p_of as u64 * widths.p_overflow_threshold as u64 + e.p as u64,
        }
    }

    /// A pruned flow's reconstructed density always exceeds 4 when the
    /// frequency limit is at least 4x the persistence threshold (the default
    /// ratio is 256/64); checked in debug builds at the prune site.
    fn assert_prune_density(&self, f_of: u32, p_of: u32, origin: (usize, usize)) {
        if cfg!(debug_assertions) {
            let widths = &self.config.widths;
            let f_limit = widths.frequency_limit() as f64;
            let threshold = widths.p_overflow_threshold as f64;
            if f_limit >= 4.0 * threshold {
                let p_residual = self.cl.entry(origin.0, origin.1).p as f64;
                let density = f_of as f64 * f_limit / (p_of as f64 * threshold + p_residual);
                debug_assert!(
                    density > 4.0,
                    "prune fired at density {density} (f_of={f_of}, p_of={p_of})"
                );
            }
        }
    }

    /// Reports every flow the sketch still accounts for: protected flows with
    /// reconstructed totals, plus flows retired at maximal persistence. The
    /// PS subset applies the configured criterion.
    pub fn query(&self) -> ReportSet {
        let mut report = ReportSet::default();
        for (&id, entry) in &self.pl {
            let Some(coords) = self.locate_protected(id) else {
                debug_assert!(false, "protected flow {id} has no competition entry");
                continue;
            };
            let stats = self.reconstruct(entry, coords);
            report.stats.insert(id, stats);
        }
        for &(id, stats) in &self.saturated {
            report.stats.entry(id).or_insert(stats);
        }
        let criterion = &self.config.criterion;
        report.ps = report
            .stats
            .iter()
            .filter(|(_, s)| criterion.matches(s))
            .map(|(&k, _)| k)
            .collect::<BTreeSet<_>>();
        report
    }

    pub fn snapshot(&self) -> SketchSnapshot {
        let width = self.config.bucket_width;
        let mut competition = Vec::new();
        for (i, e) in self.cl.entries.iter().enumerate() {
            if !e.is_empty() {
                competition.push((i / width, i % width, *e));
            }
        }
        let mut protection: Vec<(FlowKey, ProtectionEntry)> =
            self.pl.iter().map(|(&k, &v)| (k, v)).collect();
        protection.sort_by_key(|&(k, _)| k);
        SketchSnapshot {
            competition,
            protection,
            window_index: self.window_index,
        }
    }

    /// Deterministic text rendering of the state: non-empty CL entries in
    /// layout order, then PL entries by flow id.
    pub fn dump(&self) -> String {
        let snap = self.snapshot();
        let mut out = String::new();
        for (bucket, slot, e) in &snap.competition {
            out.push_str(&format!(
                "cl {bucket} {slot} {fp} {f} {p} {w} {of}\n",
                fp = e.fp,
                f = e.f,
                p = e.p,
                w = e.flag_w as u8,
                of = e.flag_of as u8,
            ));
        }
        for (id, entry) in &snap.protection {
            out.push_str(&format!("pl {} {} {}\n", id.0, entry.f_of, entry.p_of));
        }
        out
    }

    /// Differential check: the single-pass bucket scan and the three-pass
    /// reference agree on the flow's bucket. Exposed for the fuzz suite.
    #[doc(hidden)]
    pub fn debug_scan_agrees(&self, flow: FlowKey) -> bool {
        let fp = self.fingerprint(flow);
        let entries = self.cl.bucket(self.bucket_of(fp));
        scan_bucket(entries, fp) == scan_bucket_naive(entries, fp)
    }
}
