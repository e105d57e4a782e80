//! Windowed packet traces and the exact-counting reference.
//!
//! A trace is a stream of `(flow, window)` records with non-decreasing window
//! indices. Frequency is the number of packets of a flow, persistence the
//! number of distinct windows it appears in, and density their ratio; the
//! detection target is the set of flows that are persistent (`p >= p0`) yet
//! sparse (`f/p <= d0`).

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// 64-bit flow identifier (e.g. a packed five-tuple digest).
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct FlowKey(pub u64);

impl std::fmt::Display for FlowKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PacketRecord {
    pub flow: FlowKey,
    pub window: u64,
}

/// A packet stream with window indices already assigned.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowedTrace {
    records: Vec<PacketRecord>,
    /// Packets per window when windows were derived by [`partition_windows`];
    /// `None` when the source carried explicit window indices.
    window_size: Option<u64>,
}

impl WindowedTrace {
    /// Wraps explicit records, checking that window indices never decrease.
    pub fn from_records(records: Vec<PacketRecord>) -> Result<Self> {
        for pair in records.windows(2) {
            if pair[1].window < pair[0].window {
                return Err(Error::invalid(
                    "records",
                    format!(
                        "window indices must be non-decreasing, saw {} after {}",
                        pair[1].window, pair[0].window
                    ),
                ));
            }
        }
        Ok(WindowedTrace {
            records,
            window_size: None,
        })
    }

    pub fn records(&self) -> &[PacketRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn window_size(&self) -> Option<u64> {
        self.window_size
    }

    /// Number of windows spanned, i.e. highest index + 1. Empty trace: 0.
    pub fn window_count(&self) -> u64 {
        self.records.last().map_or(0, |r| r.window + 1)
    }
}

/// Assigns event `i` (0-based) to window `i / window_size`.
pub fn partition_windows(events: &[FlowKey], window_size: u64) -> Result<WindowedTrace> {
    if window_size == 0 {
        return Err(Error::invalid("window_size", "must be >= 1"));
    }
    let records = events
        .iter()
        .enumerate()
        .map(|(i, &flow)| PacketRecord {
            flow,
            window: i as u64 / window_size,
        })
        .collect();
    Ok(WindowedTrace {
        records,
        window_size: Some(window_size),
    })
}

/// Exact per-flow totals: packet count and distinct-window count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct FlowStats {
    pub frequency: u64,
    pub persistence: u64,
}

impl FlowStats {
    /// Frequency per window of presence; undefined until the flow appears.
    pub fn density(&self) -> Option<f64> {
        if self.persistence == 0 {
            None
        } else {
            Some(self.frequency as f64 / self.persistence as f64)
        }
    }
}

/// Reporting thresholds: a flow is persistent-and-sparse when its
/// persistence is at least `p0` and its density at most `d0` (both inclusive).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Criterion {
    pub p0: u64,
    pub d0: f64,
}

impl Criterion {
    pub fn new(p0: u64, d0: f64) -> Result<Self> {
        if p0 < 1 {
            return Err(Error::invalid("p0", "must be >= 1"));
        }
        if !d0.is_finite() || d0 <= 0.0 {
            return Err(Error::invalid("d0", "must be finite and > 0"));
        }
        Ok(Criterion { p0, d0 })
    }

    /// Density acceptance `f/p <= d0`, evaluated in product form so every
    /// detector and the exact oracle share one boundary convention.
    pub fn density_within(&self, frequency: u64, persistence: u64) -> bool {
        frequency as f64 <= self.d0 * persistence as f64
    }

    pub fn matches(&self, stats: &FlowStats) -> bool {
        stats.persistence >= self.p0 && self.density_within(stats.frequency, stats.persistence)
    }
}

/// Brute-force ground truth for a trace.
///
/// Distinct windows are counted with one remembered window per flow, which is
/// valid because traces keep window indices non-decreasing.
pub fn exact_stats(trace: &WindowedTrace) -> HashMap<FlowKey, FlowStats> {
    let mut stats: HashMap<FlowKey, FlowStats> = HashMap::new();
    let mut last_window: HashMap<FlowKey, u64> = HashMap::new();
    for rec in trace.records() {
        let entry = stats.entry(rec.flow).or_default();
        entry.frequency += 1;
        if last_window.insert(rec.flow, rec.window) != Some(rec.window) {
            entry.persistence += 1;
        }
    }
    stats
}

/// Flows meeting the reporting criterion, sorted for reproducible output.
pub fn answer_set(
    stats: &HashMap<FlowKey, FlowStats>,
    criterion: &Criterion,
) -> std::collections::BTreeSet<FlowKey> {
    stats
        .iter()
        .filter(|(_, s)| criterion.matches(s))
        .map(|(&k, _)| k)
        .collect()
}

fn parse_flow_id(text: &str, line: usize) -> Result<u64> {
    let text = text.trim();
    let parsed = if let Some(hex) = text.strip_prefix("0x").or_else(|| text.strip_prefix("0X")) {
        u64::from_str_radix(hex, 16)
    } else {
        text.parse::<u64>()
    };
    parsed.map_err(|_| Error::TraceParse {
        line,
        reason: format!("bad flow id `{text}`"),
    })
}

/// Reads the text trace format: one record per line, either `flow_id,window`
/// or bare `flow_id` (then `window_size` must be given and windows are
/// derived by position). Flow ids are decimal or 0x-prefixed hex; `#` starts
/// a comment; blank lines are skipped. Mixing the two record shapes, or
/// passing `window_size` alongside explicit windows, is rejected.
pub fn read_trace<R: BufRead>(reader: R, window_size: Option<u64>) -> Result<WindowedTrace> {
    let mut records: Vec<PacketRecord> = Vec::new();
    let mut bare_events: Vec<FlowKey> = Vec::new();
    let mut explicit: Option<bool> = None;

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let data = match line.split('#').next() {
            Some(d) => d.trim(),
            None => "",
        };
        if data.is_empty() {
            continue;
        }
        let mut fields = data.split(',');
        let flow = FlowKey(parse_flow_id(fields.next().unwrap_or(""), line_no)?);
        let window_field = fields.next();
        if fields.next().is_some() {
            return Err(Error::TraceParse {
                line: line_no,
                reason: "expected at most two fields".into(),
            });
        }
        let has_window = window_field.is_some();
        match explicit {
            None => explicit = Some(has_window),
            Some(e) if e != has_window => {
                return Err(Error::TraceParse {
                    line: line_no,
                    reason: "mixed records with and without window column".into(),
                });
            }
            _ => {}
        }
        if let Some(w) = window_field {
            let window = w.trim().parse::<u64>().map_err(|_| Error::TraceParse {
                line: line_no,
                reason: format!("bad window index `{}`", w.trim()),
            })?;
            if let Some(prev) = records.last() {
                if window < prev.window {
                    return Err(Error::TraceParse {
                        line: line_no,
                        reason: format!(
                            "window indices must be non-decreasing, saw {window} after {}",
                            prev.window
                        ),
                    });
                }
            }
            records.push(PacketRecord { flow, window });
        } else {
            bare_events.push(flow);
        }
    }

    match explicit {
        Some(true) => {
            if window_size.is_some() {
                return Err(Error::invalid(
                    "window_size",
                    "trace already carries explicit window indices",
                ));
            }
            Ok(WindowedTrace {
                records,
                window_size: None,
            })
        }
        Some(false) => {
            let t = window_size.ok_or_else(|| {
                Error::invalid("window_size", "required for traces without a window column")
            })?;
            partition_windows(&bare_events, t)
        }
        // An empty trace is representable; window derivation is moot.
        None => Ok(WindowedTrace {
            records: Vec::new(),
            window_size,
        }),
    }
}

pub fn read_trace_file(path: &Path, window_size: Option<u64>) -> Result<WindowedTrace> {
    let file = std::fs::File::open(path)?;
    read_trace(std::io::BufReader::new(file), window_size)
}

/// Writes `flow_id,window` lines (decimal), the canonical on-disk form.
pub fn write_trace<W: Write>(mut writer: W, trace: &WindowedTrace) -> Result<()> {
    for rec in trace.records() {
        writeln!(writer, "{},{}", rec.flow.0, rec.window)?;
    }
    Ok(())
}

pub fn write_trace_file(path: &Path, trace: &WindowedTrace) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut buf = std::io::BufWriter::new(file);
    write_trace(&mut buf, trace)?;
    buf.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn keys(ids: &[u64]) -> Vec<FlowKey> {
        ids.iter().copied().map(FlowKey).collect()
    }

    #[test]
    fn partition_floor_division() {
        // 10 events, window size 3 -> windows 0,0,0,1,1,1,2,2,2,3.
        let trace = partition_windows(&keys(&[1, 1, 1, 1, 1, 1, 1, 1, 1, 1]), 3).unwrap();
        let windows: Vec<u64> = trace.records().iter().map(|r| r.window).collect();
        assert_eq!(windows, vec![0, 0, 0, 1, 1, 1, 2, 2, 2, 3]);
        assert_eq!(trace.window_count(), 4);
    }

    #[test]
    fn partition_zero_window_size_rejected() {
        assert!(matches!(
            partition_windows(&keys(&[1]), 0),
            Err(Error::InvalidParameter { .. })
        ));
    }

    #[test]
    fn exact_stats_counts_distinct_windows() {
        // Flow 7 appears twice in window 0 and once in window 2: f=3, p=2.
        let trace = WindowedTrace::from_records(vec![
            PacketRecord { flow: FlowKey(7), window: 0 },
            PacketRecord { flow: FlowKey(7), window: 0 },
            PacketRecord { flow: FlowKey(9), window: 1 },
            PacketRecord { flow: FlowKey(7), window: 2 },
        ])
        .unwrap();
        let stats = exact_stats(&trace);
        assert_eq!(stats[&FlowKey(7)], FlowStats { frequency: 3, persistence: 2 });
        assert_eq!(stats[&FlowKey(9)], FlowStats { frequency: 1, persistence: 1 });
        assert_eq!(stats[&FlowKey(7)].density(), Some(1.5));
    }

    #[test]
    fn decreasing_windows_rejected() {
        let result = WindowedTrace::from_records(vec![
            PacketRecord { flow: FlowKey(1), window: 3 },
            PacketRecord { flow: FlowKey(1), window: 2 },
        ]);
        assert!(result.is_err());
    }

    #[test]
    fn answer_set_inclusive_boundaries() {
        let mut stats = HashMap::new();
        // Exactly at both thresholds: included.
        stats.insert(FlowKey(1), FlowStats { frequency: 60, persistence: 50 });
        // Persistence one short: excluded.
        stats.insert(FlowKey(2), FlowStats { frequency: 49, persistence: 49 });
        // Density just above: excluded.
        stats.insert(FlowKey(3), FlowStats { frequency: 61, persistence: 50 });
        let criterion = Criterion::new(50, 1.2).unwrap();
        let answer = answer_set(&stats, &criterion);
        assert!(answer.contains(&FlowKey(1)));
        assert!(!answer.contains(&FlowKey(2)));
        assert!(!answer.contains(&FlowKey(3)));
    }

    #[test]
    fn criterion_validation() {
        assert!(Criterion::new(0, 1.2).is_err());
        assert!(Criterion::new(50, 0.0).is_err());
        assert!(Criterion::new(50, f64::NAN).is_err());
        assert!(Criterion::new(1, 0.5).is_ok());
    }

    #[test]
    fn read_explicit_windows() {
        let text = "# comment line\n17,0\n0x11,0\n17,1 # trailing comment\n\n";
        let trace = read_trace(text.as_bytes(), None).unwrap();
        assert_eq!(trace.len(), 3);
        assert_eq!(trace.records()[1].flow, FlowKey(17));
        assert_eq!(trace.records()[2].window, 1);
    }

    #[test]
    fn read_bare_ids_with_derived_windows() {
        let text = "5\n6\n5\n6\n";
        let trace = read_trace(text.as_bytes(), Some(2)).unwrap();
        assert_eq!(trace.window_size(), Some(2));
        assert_eq!(trace.records()[2].window, 1);
    }

    #[test]
    fn read_rejects_ambiguous_or_missing_window_source() {
        assert!(read_trace("5,0\n".as_bytes(), Some(2)).is_err());
        assert!(read_trace("5\n".as_bytes(), None).is_err());
        assert!(read_trace("5,0\n6\n".as_bytes(), None).is_err());
    }

    #[test]
    fn read_rejects_garbage() {
        assert!(read_trace("notanumber,0\n".as_bytes(), None).is_err());
        assert!(read_trace("5,xyz\n".as_bytes(), None).is_err());
        assert!(read_trace("5,0,9\n".as_bytes(), None).is_err());
        assert!(read_trace("5,1\n5,0\n".as_bytes(), None).is_err());
    }

    #[test]
    fn roundtrip_preserves_records() {
        let trace = partition_windows(&keys(&[3, 1, 4, 1, 5, 9, 2, 6]), 4).unwrap();
        let mut buf = Vec::new();
        write_trace(&mut buf, &trace).unwrap();
        let back = read_trace(buf.as_slice(), None).unwrap();
        assert_eq!(back.records(), trace.records());
    }
}
