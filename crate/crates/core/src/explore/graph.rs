use std::collections::{BTreeSet, HashMap};

use crate::exec::{AllocId, Event, EventKind, MemLoc, Tid, Trace};

/// Where a read took (some of) its bytes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RfSource {
    /// The initializer of a global.
    Init,
    Event(usize),
}

/// Bytes `loc` of event `read` were written by `source`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RfEdge {
    pub read: usize,
    pub source: RfSource,
    pub loc: MemLoc,
}

/// One execution as events plus the relations between them. Edges are
/// pairs of event indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutionGraph {
    pub events: Vec<Event>,
    pub po: Vec<(usize, usize)>,
    pub rf: Vec<RfEdge>,
    pub co: Vec<(usize, usize)>,
    /// Spawn event to the child's first event.
    pub tc: Vec<(usize, usize)>,
    /// Last event of a thread to the join that waited for it.
    pub tj: Vec<(usize, usize)>,
}

impl ExecutionGraph {
    pub fn rf_sources(&self, read: usize) -> Vec<RfSource> {
        let set: BTreeSet<RfSource> = self
            .rf
            .iter()
            .filter(|e| e.read == read)
            .map(|e| e.source)
            .collect();
        set.into_iter().collect()
    }

    /// All edges of po, rf (from events), co, tc and tj.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut all: Vec<(usize, usize)> = Vec::new();
        all.extend(&self.po);
        all.extend(self.rf.iter().filter_map(|e| match e.source {
            RfSource::Event(w) => Some((w, e.read)),
            RfSource::Init => None,
        }));
        all.extend(&self.co);
        all.extend(&self.tc);
        all.extend(&self.tj);
        all
    }

    pub fn is_acyclic(&self) -> bool {
        let n = self.events.len();
        let mut indeg = vec![0usize; n];
        let mut out: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (a, b) in self.edges() {
            out[a].push(b);
            indeg[b] += 1;
        }
        let mut ready: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut seen = 0;
        while let Some(v) = ready.pop() {
            seen += 1;
            for &w in &out[v] {
                indeg[w] -= 1;
                if indeg[w] == 0 {
                    ready.push(w);
                }
            }
        }
        seen == n
    }
}

fn accesses(e: &Event) -> Option<MemLoc> {
    if e.is_access() && e.fault.is_none() {
        e.loc
    } else {
        None
    }
}

/// Derives po, byte-granular rf, co, tc and tj from trace order.
pub fn build_graph(trace: &Trace) -> ExecutionGraph {
    let events = trace.events.clone();
    let mut po = Vec::new();
    let mut last_of: HashMap<Tid, usize> = HashMap::new();
    let mut first_of: HashMap<Tid, usize> = HashMap::new();
    for (i, e) in events.iter().enumerate() {
        if let Some(p) = last_of.insert(e.tid, i) {
            po.push((p, i));
        }
        first_of.entry(e.tid).or_insert(i);
    }

    let mut tc = Vec::new();
    let mut tj = Vec::new();
    for (i, e) in events.iter().enumerate() {
        match (e.kind, e.peer) {
            (EventKind::ThreadCreate, Some(c)) => {
                if let Some(&f) = first_of.get(&c) {
                    tc.push((i, f));
                }
            }
            (EventKind::ThreadJoin, Some(t)) => {
                if let Some((end, _)) = events[..i]
                    .iter()
                    .enumerate()
                    .rev()
                    .find(|(_, x)| x.tid == t && x.kind == EventKind::ThreadEnd)
                {
                    tj.push((end, i));
                }
            }
            _ => {}
        }
    }

    let mut rf = Vec::new();
    let mut co_set: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut writer: HashMap<(AllocId, i64), usize> = HashMap::new();
    for (i, e) in events.iter().enumerate() {
        let Some(loc) = accesses(e) else {
            continue;
        };
        if e.is_read() {
            let mut run: Option<(RfSource, i64)> = None;
            for b in loc.offset..=loc.end() {
                let src = (b < loc.end()).then(|| {
                    writer
                        .get(&(loc.alloc, b))
                        .map_or(RfSource::Init, |&w| RfSource::Event(w))
                });
                match (run, src) {
                    (Some((s, _)), Some(t)) if s == t => {}
                    (prev, next) => {
                        if let Some((s, start)) = prev {
                            rf.push(RfEdge {
                                read: i,
                                source: s,
                                loc: MemLoc {
                                    alloc: loc.alloc,
                                    offset: start,
                                    width: (b - start) as u32,
                                },
                            });
                        }
                        run = next.map(|t| (t, b));
                    }
                }
            }
        }
        if e.is_write() {
            for b in loc.offset..loc.end() {
                if let Some(prev) = writer.insert((loc.alloc, b), i) {
                    if prev != i {
                        co_set.insert((prev, i));
                    }
                }
            }
        }
    }

    ExecutionGraph {
        events,
        po,
        rf,
        co: co_set.into_iter().collect(),
        tc,
        tj,
    }
}
