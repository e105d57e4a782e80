//! Evaluation harness: scoring against the exact oracle, budget-matched
//! detector construction, parameter sweeps, throughput measurement, and
//! trace-shape reports.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::baselines::{
    run_trace, CmsConfig, Detector, ExactDetector, PiMode, PiSketch, PiSketchConfig, Strawman,
    StrawmanConfig,
};
use crate::error::{Error, Result};
use crate::hash::{derive_seed, hash_bytes};
use crate::report::ReportSet;
use crate::sketch::{PsSketch, SketchConfig};
use crate::trace::{answer_set, exact_stats, Criterion, FlowKey, FlowStats, WindowedTrace};

/// Classification and estimation quality of one report against the oracle.
///
/// Conventions: an empty PS report scores precision 0; recall is 1 when both
/// the report and the truth are empty and 0 when only the truth is. Relative
/// errors average over the flows the detector still tracks (its `stats` map),
/// so they measure estimation quality on whatever survived, and are `None`
/// when nothing did.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub are_frequency: Option<f64>,
    pub are_persistence: Option<f64>,
    pub are_combined: Option<f64>,
    pub reported_ps: usize,
    pub reported_total: usize,
    pub truth_ps: usize,
    pub true_positives: usize,
}

fn f1_of(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

fn prf(true_positives: usize, reported: usize, truth: usize) -> (f64, f64, f64) {
    let precision = if reported == 0 {
        0.0
    } else {
        true_positives as f64 / reported as f64
    };
    let recall = if truth == 0 {
        if reported == 0 {
            1.0
        } else {
            0.0
        }
    } else {
        true_positives as f64 / truth as f64
    };
    (precision, recall, f1_of(precision, recall))
}

pub fn score(
    report: &ReportSet,
    truth: &BTreeSet<FlowKey>,
    exact: &HashMap<FlowKey, FlowStats>,
) -> ScoreReport {
    let true_positives = report.ps.iter().filter(|k| truth.contains(k)).count();
    let (precision, recall, f1) = prf(true_positives, report.ps.len(), truth.len());

    let mut n = 0u64;
    let (mut err_f, mut err_p) = (0.0f64, 0.0f64);
    for (flow, est) in &report.stats {
        let Some(truth_stats) = exact.get(flow) else {
            debug_assert!(false, "detector reported a flow absent from the trace");
            continue;
        };
        err_f += (est.frequency as f64 - truth_stats.frequency as f64).abs()
            / truth_stats.frequency as f64;
        err_p += (est.persistence as f64 - truth_stats.persistence as f64).abs()
            / truth_stats.persistence as f64;
        n += 1;
    }
    let (are_frequency, are_persistence, are_combined) = if n > 0 {
        let f = err_f / n as f64;
        let p = err_p / n as f64;
        (Some(f), Some(p), Some((f + p) / 2.0))
    } else {
        (None, None, None)
    };

    ScoreReport {
        precision,
        recall,
        f1,
        are_frequency,
        are_persistence,
        are_combined,
        reported_ps: report.ps.len(),
        reported_total: report.stats.len(),
        truth_ps: truth.len(),
        true_positives,
    }
}

/// Which detector a cell runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectorKind {
    PsSketch,
    PiSketch,
    PiSketchDensity,
    Strawman,
    Exact,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 5] = [
        DetectorKind::PsSketch,
        DetectorKind::PiSketch,
        DetectorKind::PiSketchDensity,
        DetectorKind::Strawman,
        DetectorKind::Exact,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            DetectorKind::PsSketch => "pssketch",
            DetectorKind::PiSketch => "pisketch",
            DetectorKind::PiSketchDensity => "pisketch-density",
            DetectorKind::Strawman => "strawman",
            DetectorKind::Exact => "exact",
        }
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DetectorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pssketch" => Ok(DetectorKind::PsSketch),
            "pisketch" => Ok(DetectorKind::PiSketch),
            "pisketch-density" => Ok(DetectorKind::PiSketchDensity),
            "strawman" => Ok(DetectorKind::Strawman),
            "exact" => Ok(DetectorKind::Exact),
            other => Err(Error::invalid(
                "detector",
                format!("unknown detector {other:?}"),
            )),
        }
    }
}

/// Shape knobs used when fitting a detector into a memory budget. Defaults
/// match the evaluation setup; sweeps normally leave them alone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HarnessOptions {
    /// Two-layer sketch: entries per competition bucket.
    pub bucket_width: usize,
    /// Two-layer sketch: fingerprint width. Wider fingerprints cost bits per
    /// entry but cut the odds that two flows merge into one entry; traces
    /// with many thousands of distinct flows want more than the default 16.
    pub fingerprint_bits: u32,
    /// Two-layer sketch: fraction of the budget spent on the protection
    /// layer.
    pub protection_fraction: f64,
    /// Rows for the count-min and on-off arrays inside the strawman.
    pub cms_rows: usize,
    /// Weight gained per present window in the single-layer cell store.
    pub pi_weight_increment: u32,
    /// Fraction of the single-layer budget spent on its presence filter.
    pub pi_filter_fraction: f64,
    /// Fixed weight threshold for the weight-mode query; `None` sweeps all
    /// thresholds after the run and keeps the best-F1 one (an upper bound on
    /// what any fixed threshold could score).
    pub pi_weight_threshold: Option<u32>,
}

impl Default for HarnessOptions {
    fn default() -> Self {
        HarnessOptions {
            bucket_width: 32,
            fingerprint_bits: 16,
            protection_fraction: 0.15,
            cms_rows: 3,
            pi_weight_increment: 8,
            pi_filter_fraction: 0.1,
            pi_weight_threshold: None,
        }
    }
}

/// One evaluation cell: a detector kind fitted into a memory budget and run
/// under a reporting criterion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellConfig {
    pub detector: DetectorKind,
    pub memory_bits: u64,
    pub criterion: Criterion,
    pub seed: u64,
    #[serde(default)]
    pub options: HarnessOptions,
}

impl CellConfig {
    /// Stable 64-bit digest of the full cell configuration.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("cell config serializes");
        format!("{:016x}", hash_bytes(&bytes, 0xE7A1))
    }
}

/// A constructed detector, concrete so post-run hooks (weight sweeps, state
/// dumps) can reach the underlying type.
#[allow(clippy::large_enum_variant)]
pub enum BuiltDetector {
    Ps(PsSketch),
    Pi(PiSketch),
    Straw(Strawman),
    Exact(ExactDetector),
}

impl BuiltDetector {
    pub fn ps(&self) -> Option<&PsSketch> {
        match self {
            BuiltDetector::Ps(d) => Some(d),
            _ => None,
        }
    }

    fn pi(&self) -> Option<&PiSketch> {
        match self {
            BuiltDetector::Pi(d) => Some(d),
            _ => None,
        }
    }
}

impl Detector for BuiltDetector {
    fn name(&self) -> &'static str {
        match self {
            BuiltDetector::Ps(d) => d.name(),
            BuiltDetector::Pi(d) => d.name(),
            BuiltDetector::Straw(d) => d.name(),
            BuiltDetector::Exact(d) => d.name(),
        }
    }

    fn new_window(&mut self) {
        match self {
            BuiltDetector::Ps(d) => d.new_window(),
            BuiltDetector::Pi(d) => d.new_window(),
            BuiltDetector::Straw(d) => d.new_window(),
            BuiltDetector::Exact(d) => d.new_window(),
        }
    }

    fn insert(&mut self, flow: FlowKey) {
        match self {
            BuiltDetector::Ps(d) => Detector::insert(d, flow),
            BuiltDetector::Pi(d) => d.insert(flow),
            BuiltDetector::Straw(d) => d.insert(flow),
            BuiltDetector::Exact(d) => d.insert(flow),
        }
    }

    fn query(&self) -> ReportSet {
        match self {
            BuiltDetector::Ps(d) => Detector::query(d),
            BuiltDetector::Pi(d) => Detector::query(d),
            BuiltDetector::Straw(d) => d.query(),
            BuiltDetector::Exact(d) => d.query(),
        }
    }

    fn memory_bits(&self) -> u64 {
        match self {
            BuiltDetector::Ps(d) => Detector::memory_bits(d),
            BuiltDetector::Pi(d) => PiSketch::memory_bits(d),
            BuiltDetector::Straw(d) => d.memory_bits(),
            BuiltDetector::Exact(d) => Detector::memory_bits(d),
        }
    }
}

/// Fits a two-layer sketch into `memory_bits`: the protection layer takes
/// `protection_fraction` of the budget, the rest becomes competition buckets
/// of `bucket_width` entries. The persistence overflow point is aligned to
/// the reporting threshold `p0` (clamped to the counter range) so protection
/// decisions track the criterion.
pub fn build_pssketch(
    memory_bits: u64,
    criterion: Criterion,
    seed: u64,
    options: &HarnessOptions,
) -> Result<PsSketch> {
    if !(options.protection_fraction > 0.0 && options.protection_fraction < 1.0) {
        return Err(Error::invalid("protection_fraction", "must be in (0, 1)"));
    }
    if options.bucket_width == 0 {
        return Err(Error::invalid("bucket_width", "must be >= 1"));
    }
    let mut config = SketchConfig {
        bucket_width: options.bucket_width,
        criterion,
        hash_seed: derive_seed(seed, 0x40),
        rng_seed: derive_seed(seed, 0x41),
        ..SketchConfig::default()
    };
    config.widths.fingerprint_bits = options.fingerprint_bits;
    let p_cap = 1u64 << config.widths.persistence_bits;
    config.widths.p_overflow_threshold = criterion.p0.clamp(2, p_cap) as u32;

    let pl_entry = config.widths.protection_entry_bits();
    let cl_entry = config.widths.competition_entry_bits();
    let pl_bits = (memory_bits as f64 * options.protection_fraction) as u64;
    config.protected_capacity = (pl_bits / pl_entry).max(1) as usize;
    let cl_bits = memory_bits.saturating_sub(config.protected_capacity as u64 * pl_entry);
    config.buckets = (cl_bits / (options.bucket_width as u64 * cl_entry)).max(1) as usize;
    PsSketch::new(config)
}

/// Fits the single-layer cell store into `memory_bits`: the presence filter
/// takes `pi_filter_fraction` of the budget (at least 64 bits), the rest is
/// split into cells of `64 + 16 + 2*16` bits.
pub fn build_pisketch(
    memory_bits: u64,
    criterion: Criterion,
    mode: PiMode,
    seed: u64,
    options: &HarnessOptions,
) -> Result<PiSketch> {
    if !(options.pi_filter_fraction > 0.0 && options.pi_filter_fraction < 1.0) {
        return Err(Error::invalid("pi_filter_fraction", "must be in (0, 1)"));
    }
    let filter_bits = ((memory_bits as f64 * options.pi_filter_fraction) as usize).max(64);
    let cell_bits = 64 + 16 + 2 * 16;
    let cells = (memory_bits.saturating_sub(filter_bits as u64) / cell_bits).max(1) as usize;
    PiSketch::new(
        PiSketchConfig {
            cells,
            weight_increment: options.pi_weight_increment,
            weight_bits: 16,
            counter_bits: 16,
            filter_bits,
            criterion,
            seed: derive_seed(seed, 0x50),
        },
        mode,
    )
}

/// Fits the composition baseline into `memory_bits`: half the budget goes to
/// the count-min array, a quarter to the on-off array, a quarter to the
/// candidate list.
pub fn build_strawman(
    memory_bits: u64,
    criterion: Criterion,
    seed: u64,
    options: &HarnessOptions,
) -> Result<Strawman> {
    if options.cms_rows == 0 {
        return Err(Error::invalid("cms_rows", "must be >= 1"));
    }
    let rows = options.cms_rows;
    let cms_counter_bits = 32u32;
    let oos_counter_bits = 16u32;
    let cms_cols = ((memory_bits / 2) / (rows as u64 * cms_counter_bits as u64)).max(1) as usize;
    let oos_cols =
        ((memory_bits / 4) / (rows as u64 * (oos_counter_bits as u64 + 1))).max(1) as usize;
    let capacity = ((memory_bits / 4) / 64).max(1) as usize;
    Strawman::new(
        StrawmanConfig {
            cms: CmsConfig {
                rows,
                cols: cms_cols,
                counter_bits: cms_counter_bits,
                seed: derive_seed(seed, 0x60),
            },
            oos: CmsConfig {
                rows,
                cols: oos_cols,
                counter_bits: oos_counter_bits,
                seed: derive_seed(seed, 0x61),
            },
            candidate_capacity: capacity,
        },
        criterion,
    )
}

/// Builds the detector a cell describes.
pub fn build_detector(cell: &CellConfig) -> Result<BuiltDetector> {
    match cell.detector {
        DetectorKind::PsSketch => Ok(BuiltDetector::Ps(build_pssketch(
            cell.memory_bits,
            cell.criterion,
            cell.seed,
            &cell.options,
        )?)),
        DetectorKind::PiSketch => Ok(BuiltDetector::Pi(build_pisketch(
            cell.memory_bits,
            cell.criterion,
            PiMode::Weight(cell.options.pi_weight_threshold.unwrap_or(0)),
            cell.seed,
            &cell.options,
        )?)),
        DetectorKind::PiSketchDensity => Ok(BuiltDetector::Pi(build_pisketch(
            cell.memory_bits,
            cell.criterion,
            PiMode::Density,
            cell.seed,
            &cell.options,
        )?)),
        DetectorKind::Strawman => Ok(BuiltDetector::Straw(build_strawman(
            cell.memory_bits,
            cell.criterion,
            cell.seed,
            &cell.options,
        )?)),
        DetectorKind::Exact => Ok(BuiltDetector::Exact(ExactDetector::new(cell.criterion))),
    }
}

/// One line of sweep output; `error` carries a build failure in-row instead
/// of aborting the sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub detector: String,
    pub memory_bits: u64,
    pub p0: u64,
    pub d0: f64,
    pub seed: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub are_frequency: Option<f64>,
    pub are_persistence: Option<f64>,
    pub are_combined: Option<f64>,
    pub reported_ps: usize,
    pub reported_total: usize,
    pub truth_ps: usize,
    pub true_positives: usize,
    /// Threshold the weight-mode query ended up using, when applicable.
    pub pi_weight_threshold: Option<u32>,
    pub throughput_pps: Option<f64>,
    pub config_digest: String,
    pub error: Option<String>,
}

impl MetricsRecord {
    fn failed(cell: &CellConfig, error: String) -> Self {
        MetricsRecord {
            detector: cell.detector.as_str().to_owned(),
            memory_bits: cell.memory_bits,
            p0: cell.criterion.p0,
            d0: cell.criterion.d0,
            seed: cell.seed,
            precision: 0.0,
            recall: 0.0,
            f1: 0.0,
            are_frequency: None,
            are_persistence: None,
            are_combined: None,
            reported_ps: 0,
            reported_total: 0,
            truth_ps: 0,
            true_positives: 0,
            pi_weight_threshold: None,
            throughput_pps: None,
            config_digest: cell.digest(),
            error: Some(error),
        }
    }
}

/// Picks the weight threshold maximizing F1 against `truth`, scanning the
/// distinct live weights from high to low. Ties keep the higher threshold
/// (the smaller report). Returns `u32::MAX` when reporting nothing is best.
fn best_weight_threshold(pi: &PiSketch, truth: &BTreeSet<FlowKey>) -> u32 {
    let mut cells: Vec<(u32, bool)> = pi
        .live_weights()
        .map(|(k, w)| (w, truth.contains(&k)))
        .collect();
    cells.sort_unstable_by_key(|c| std::cmp::Reverse(c.0));

    // Empty report: precision 0 by convention, so F1 is 0 even if truth is
    // empty too; any positive-F1 threshold beats it.
    let mut best_f1 = 0.0f64;
    let mut best_w = u32::MAX;
    let (mut tp, mut reported, mut i) = (0usize, 0usize, 0usize);
    while i < cells.len() {
        let w = cells[i].0;
        while i < cells.len() && cells[i].0 == w {
            reported += 1;
            tp += cells[i].1 as usize;
            i += 1;
        }
        let (_, _, f1) = prf(tp, reported, truth.len());
        if f1 > best_f1 {
            best_f1 = f1;
            best_w = w;
        }
    }
    best_w
}

/// Runs one cell over the trace and scores it against precomputed exact
/// stats. Build errors land in the record's `error` field.
pub fn run_cell(
    cell: &CellConfig,
    trace: &WindowedTrace,
    exact: &HashMap<FlowKey, FlowStats>,
) -> MetricsRecord {
    let mut detector = match build_detector(cell) {
        Ok(d) => d,
        Err(e) => return MetricsRecord::failed(cell, e.to_string()),
    };
    run_trace(&mut detector, trace);
    let truth = answer_set(exact, &cell.criterion);

    let mut pi_weight_threshold = None;
    let report = if cell.detector == DetectorKind::PiSketch {
        let pi = detector.pi().expect("weight-mode cell built a cell store");
        let threshold = cell
            .options
            .pi_weight_threshold
            .unwrap_or_else(|| best_weight_threshold(pi, &truth));
        pi_weight_threshold = Some(threshold);
        pi.query_mode(PiMode::Weight(threshold))
    } else {
        detector.query()
    };
    let s = score(&report, &truth, exact);

    MetricsRecord {
        detector: cell.detector.as_str().to_owned(),
        memory_bits: detector.memory_bits(),
        p0: cell.criterion.p0,
        d0: cell.criterion.d0,
        seed: cell.seed,
        precision: s.precision,
        recall: s.recall,
        f1: s.f1,
        are_frequency: s.are_frequency,
        are_persistence: s.are_persistence,
        are_combined: s.are_combined,
        reported_ps: s.reported_ps,
        reported_total: s.reported_total,
        truth_ps: s.truth_ps,
        true_positives: s.true_positives,
        pi_weight_threshold,
        throughput_pps: None,
        config_digest: cell.digest(),
        error: None,
    }
}

/// Runs every cell against the trace, in order. The exact oracle is computed
/// once and shared; per-cell failures are captured in their rows.
pub fn sweep(cells: &[CellConfig], trace: &WindowedTrace) -> Vec<MetricsRecord> {
    let exact = exact_stats(trace);
    cells
        .iter()
        .map(|cell| run_cell(cell, trace, &exact))
        .collect()
}

/// Median packets-per-second over `repeats` timed runs, each on a freshly
/// built detector, after one untimed warm-up run.
pub fn measure_throughput<D, F>(
    mut factory: F,
    trace: &WindowedTrace,
    repeats: usize,
) -> Result<f64>
where
    D: Detector,
    F: FnMut() -> D,
{
    if trace.is_empty() {
        return Err(Error::EmptyTrace);
    }
    if repeats == 0 {
        return Err(Error::invalid("repeats", "must be >= 1"));
    }
    let mut warm = factory();
    run_trace(&mut warm, trace);

    let mut rates = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        let mut detector = factory();
        let start = Instant::now();
        run_trace(&mut detector, trace);
        let secs = start.elapsed().as_secs_f64().max(1e-9);
        rates.push(trace.len() as f64 / secs);
    }
    rates.sort_by(|a, b| a.partial_cmp(b).expect("rates are finite"));
    let mid = rates.len() / 2;
    Ok(if rates.len() % 2 == 1 {
        rates[mid]
    } else {
        (rates[mid - 1] + rates[mid]) / 2.0
    })
}

const METRICS_HEADER: &str = "detector,memory_bits,p0,d0,seed,precision,recall,f1,\
are_frequency,are_persistence,are_combined,reported_ps,reported_total,truth_ps,\
true_positives,pi_weight_threshold,throughput_pps,config_digest,error";

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

fn opt_f64(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

/// Renders records as CSV with a fixed header; field order and float
/// formatting are stable so identical runs produce identical bytes.
pub fn metrics_csv(records: &[MetricsRecord]) -> String {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{:.6},{:.6},{:.6},{},{},{},{},{},{},{},{},{},{},{}\n",
            csv_field(&r.detector),
            r.memory_bits,
            r.p0,
            r.d0,
            r.seed,
            r.precision,
            r.recall,
            r.f1,
            opt_f64(r.are_frequency),
            opt_f64(r.are_persistence),
            opt_f64(r.are_combined),
            r.reported_ps,
            r.reported_total,
            r.truth_ps,
            r.true_positives,
            r.pi_weight_threshold.map(|w| w.to_string()).unwrap_or_default(),
            opt_f64(r.throughput_pps),
            r.config_digest,
            r.error.as_deref().map(csv_field).unwrap_or_default(),
        ));
    }
    out
}

/// One histogram bin `[low, high)`; `high = None` means unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub low: f64,
    pub high: Option<f64>,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bins: Vec<HistogramBin>,
    /// Sum of all bin counts; every contributing flow lands in exactly one
    /// bin, so this equals the population size.
    pub total: u64,
}

impl Histogram {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_low,bin_high,count\n");
        for bin in &self.bins {
            let high = bin.high.map(|h| h.to_string()).unwrap_or_else(|| "inf".into());
            out.push_str(&format!("{},{},{}\n", bin.low, high, bin.count));
        }
        out
    }
}

/// Shape of a trace: how persistence and density are distributed over its
/// flows. Persistence uses power-of-two bins over every flow; density uses
/// quarter-wide bins (with a final unbounded one) over flows seen in at
/// least two windows, below which density is not meaningful.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionReport {
    pub flows: u64,
    pub packets: u64,
    pub windows: u64,
    pub persistence: Histogram,
    pub density: Histogram,
}

pub fn distribution_report(trace: &WindowedTrace) -> DistributionReport {
    let exact = exact_stats(trace);

    let max_p = exact.values().map(|s| s.persistence).max().unwrap_or(0);
    let mut p_bins: Vec<HistogramBin> = Vec::new();
    let mut low = 1u64;
    while low <= max_p.max(1) {
        p_bins.push(HistogramBin {
            low: low as f64,
            high: Some((low * 2) as f64),
            count: 0,
        });
        low *= 2;
    }
    for stats in exact.values() {
        let idx = ((stats.persistence as f64).log2().floor() as usize).min(p_bins.len() - 1);
        p_bins[idx].count += 1;
    }
    if exact.is_empty() {
        p_bins.clear();
    }

    // Density bins: [1, 1.25) .. [3.75, 4), then [4, inf). Exact stats have
    // f >= p, so density is always >= 1.
    let mut d_bins: Vec<HistogramBin> = (0..12)
        .map(|k| HistogramBin {
            low: 1.0 + 0.25 * k as f64,
            high: Some(1.0 + 0.25 * (k as f64 + 1.0)),
            count: 0,
        })
        .collect();
    d_bins.push(HistogramBin {
        low: 4.0,
        high: None,
        count: 0,
    });
    let mut dense_total = 0u64;
    for stats in exact.values() {
        if stats.persistence < 2 {
            continue;
        }
        let d = stats.density().expect("persistence >= 2 implies density");
        let idx = if d >= 4.0 {
            12
        } else {
            ((d - 1.0) / 0.25).floor() as usize
        };
        d_bins[idx].count += 1;
        dense_total += 1;
    }
    if dense_total == 0 {
        d_bins.clear();
    }

    DistributionReport {
        flows: exact.len() as u64,
        packets: trace.len() as u64,
        windows: trace.window_count(),
        persistence: Histogram {
            total: exact.len() as u64,
            bins: p_bins,
        },
        density: Histogram {
            total: dense_total,
            bins: d_bins,
        },
    }
}
