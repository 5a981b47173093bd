use std::collections::BTreeSet;

use super::clock::{happens_before, ordered};
use crate::exec::{Event, Trace};
use crate::ir::SrcLoc;

/// Two conflicting accesses not ordered by happens-before. `first` precedes
/// `second` in the trace; both index `Trace::events`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Race {
    pub first: usize,
    pub second: usize,
}

fn race_candidate(e: &Event) -> bool {
    e.is_access() && !e.init_store && e.fault.is_none() && e.loc.is_some()
}

/// Whether two events could race: overlapping bytes, different threads, at
/// least one write and at least one plain access.
pub fn conflicting_accesses(a: &Event, b: &Event) -> bool {
    if !(race_candidate(a) && race_candidate(b)) || a.tid == b.tid {
        return false;
    }
    let (la, lb) = (a.loc.expect("candidate"), b.loc.expect("candidate"));
    la.overlaps(&lb) && (a.is_write() || b.is_write()) && !(a.atomic && b.atomic)
}

/// Data races of one trace, ordered by the position of their later event and
/// deduplicated by the pair of source locations.
pub fn detect_races(trace: &Trace) -> Vec<Race> {
    let clocks = happens_before(trace);
    let ev = &trace.events;
    let mut seen: BTreeSet<(SrcLoc, SrcLoc)> = BTreeSet::new();
    let mut out = Vec::new();
    for j in 0..ev.len() {
        if !race_candidate(&ev[j]) {
            continue;
        }
        for i in 0..j {
            if conflicting_accesses(&ev[i], &ev[j]) && !ordered(trace, &clocks, i, j) {
                let key = (ev[i].src.clone(), ev[j].src.clone());
                if seen.insert(key) {
                    out.push(Race {
                        first: i,
                        second: j,
                    });
                }
            }
        }
    }
    out
}
