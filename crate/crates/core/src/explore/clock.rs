use std::collections::HashMap;
use std::fmt;

use crate::exec::{AllocId, EventKind, Tid, Trace};

/// Per-thread logical time. Missing entries are zero.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct VectorClock(Vec<u32>);

impl VectorClock {
    pub fn new() -> Self {
        VectorClock(Vec::new())
    }

    pub fn get(&self, t: Tid) -> u32 {
        self.0.get(t.0).copied().unwrap_or(0)
    }

    pub fn set(&mut self, t: Tid, v: u32) {
        if self.0.len() <= t.0 {
            self.0.resize(t.0 + 1, 0);
        }
        self.0[t.0] = v;
    }

    /// Component-wise maximum.
    pub fn join(&mut self, other: &VectorClock) {
        if self.0.len() < other.0.len() {
            self.0.resize(other.0.len(), 0);
        }
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a = (*a).max(*b);
        }
    }

    pub fn leq(&self, other: &VectorClock) -> bool {
        self.0
            .iter()
            .enumerate()
            .all(|(i, v)| *v <= other.get(Tid(i)))
    }
}

impl fmt::Display for VectorClock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|v| v.to_string()).collect();
        write!(f, "[{}]", parts.join(","))
    }
}

/// Happens-before clocks of every event: program order, spawn, join, and
/// reads-from between atomic accesses.
pub fn happens_before(trace: &Trace) -> Vec<VectorClock> {
    let mut thread: Vec<VectorClock> = Vec::new();
    let mut clocks: Vec<VectorClock> = Vec::with_capacity(trace.events.len());
    let mut created: HashMap<Tid, usize> = HashMap::new();
    let mut ended: HashMap<Tid, usize> = HashMap::new();
    let mut last_writer: HashMap<(AllocId, i64), usize> = HashMap::new();

    for (i, e) in trace.events.iter().enumerate() {
        if thread.len() <= e.tid.0 {
            thread.resize(e.tid.0 + 1, VectorClock::new());
        }
        let mut c = thread[e.tid.0].clone();
        match e.kind {
            EventKind::ThreadStart => {
                if let Some(&k) = created.get(&e.tid) {
                    c.join(&clocks[k]);
                }
            }
            EventKind::ThreadJoin => {
                if let Some(k) = e.peer.and_then(|p| ended.get(&p)) {
                    c.join(&clocks[*k]);
                }
            }
            _ => {}
        }
        let access = e.is_access() && e.fault.is_none();
        if access && e.atomic && e.is_read() {
            if let Some(loc) = e.loc {
                for b in loc.offset..loc.end() {
                    if let Some(&w) = last_writer.get(&(loc.alloc, b)) {
                        if trace.events[w].atomic {
                            c.join(&clocks[w]);
                        }
                    }
                }
            }
        }
        c.set(e.tid, e.seq + 1);
        if access && e.is_write() {
            if let Some(loc) = e.loc {
                for b in loc.offset..loc.end() {
                    last_writer.insert((loc.alloc, b), i);
                }
            }
        }
        match e.kind {
            EventKind::ThreadCreate => {
                if let Some(child) = e.peer {
                    created.insert(child, i);
                }
            }
            EventKind::ThreadEnd => {
                ended.insert(e.tid, i);
            }
            _ => {}
        }
        thread[e.tid.0] = c.clone();
        clocks.push(c);
    }
    clocks
}

/// Whether event `a` happens before event `b` given their clocks.
pub fn ordered(trace: &Trace, clocks: &[VectorClock], a: usize, b: usize) -> bool {
    let ea = &trace.events[a];
    clocks[b].get(ea.tid) > ea.seq
}
