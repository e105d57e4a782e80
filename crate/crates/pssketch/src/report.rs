use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::trace::{FlowKey, FlowStats};

/// Output of a detector query.
///
/// `stats` holds every flow the detector still tracks, with its estimated
/// totals; `ps` is the subset it classifies as persistent-and-sparse. Flows
/// in `stats` but not in `ps` are reported persistent-only. Ordered
/// containers keep serialized output reproducible.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ReportSet {
    pub stats: BTreeMap<FlowKey, FlowStats>,
    pub ps: BTreeSet<FlowKey>,
}

impl ReportSet {
    pub fn persistent_only(&self) -> impl Iterator<Item = FlowKey> + '_ {
        self.stats
            .keys()
            .copied()
            .filter(move |k| !self.ps.contains(k))
    }
}
