use std::fmt;

use crate::exec::{Event, EventKind, MemLoc, Tid};

/// Whether two events touch overlapping bytes from different threads with
/// at least one of them writing. Init stores never conflict.
pub fn memory_conflict(a: &Event, b: &Event) -> bool {
    if a.tid == b.tid {
        return false;
    }
    match (a.footprint(), b.footprint()) {
        (Some((la, wa)), Some((lb, wb))) => la.overlaps(&lb) && (wa || wb),
        _ => false,
    }
}

fn spawn_or_join(a: &Event, b: &Event) -> bool {
    (a.kind == EventKind::ThreadCreate && a.peer == Some(b.tid))
        || (a.kind == EventKind::ThreadEnd
            && b.kind == EventKind::ThreadJoin
            && b.peer == Some(a.tid))
}

/// The dependency relation that defines equivalence of executions: same
/// thread, conflicting memory accesses, or a spawn or join pairing.
pub fn dependent(a: &Event, b: &Event) -> bool {
    a.tid == b.tid || memory_conflict(a, b) || spawn_or_join(a, b) || spawn_or_join(b, a)
}

/// The part of an event that identifies it across equivalent executions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EventLabel {
    pub tid: Tid,
    pub seq: u32,
    pub kind: EventKind,
    pub loc: Option<MemLoc>,
    pub peer: Option<Tid>,
    pub init_store: bool,
    pub faulted: bool,
}

impl From<&Event> for EventLabel {
    fn from(e: &Event) -> Self {
        EventLabel {
            tid: e.tid,
            seq: e.seq,
            kind: e.kind,
            loc: e.loc,
            peer: e.peer,
            init_store: e.init_store,
            faulted: e.fault.is_some(),
        }
    }
}

/// Foata normal form of an execution: events grouped by the length of the
/// longest dependency chain ending in them, each group sorted. Two
/// executions have the same form exactly when they are equivalent.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalForm(pub Vec<Vec<EventLabel>>);

impl fmt::Display for CanonicalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, level) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" | ")?;
            }
            let parts: Vec<String> = level
                .iter()
                .map(|l| format!("{}.{}:{}", l.tid.0, l.seq, l.kind.name()))
                .collect();
            f.write_str(&parts.join(" "))?;
        }
        Ok(())
    }
}

pub fn canonical_form(events: &[Event]) -> CanonicalForm {
    let mut level = vec![0usize; events.len()];
    let mut levels: Vec<Vec<EventLabel>> = Vec::new();
    for j in 0..events.len() {
        let l = (0..j)
            .filter(|&i| dependent(&events[i], &events[j]))
            .map(|i| level[i] + 1)
            .max()
            .unwrap_or(0);
        level[j] = l;
        if levels.len() <= l {
            levels.resize(l + 1, Vec::new());
        }
        levels[l].push(EventLabel::from(&events[j]));
    }
    for lv in &mut levels {
        lv.sort();
    }
    CanonicalForm(levels)
}
