use std::fmt::Write as _;

use crate::exec::{Event, MemoryState};
use crate::explore::{ExecutionGraph, RfSource};

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn label(e: &Event, memory: Option<&MemoryState>) -> String {
    let mut s = format!("{}.{} {}", e.tid, e.seq, e.kind.name());
    if let Some(l) = e.loc {
        let name = memory.map_or_else(|| l.alloc.to_string(), |m| m.name(l.alloc));
        let _ = write!(s, " {name}[{}..{}]", l.offset, l.end());
    }
    match (&e.read, &e.written) {
        (Some(r), Some(w)) => {
            let _ = write!(s, " {r}->{w}");
        }
        (Some(v), None) | (None, Some(v)) => {
            let _ = write!(s, " {v}");
        }
        _ => {}
    }
    if e.atomic {
        s.push_str(" atomic");
    }
    s
}

/// Graphviz rendering of an execution graph with allocation ids as
/// location names.
pub fn dump_dot(graph: &ExecutionGraph) -> String {
    dump_dot_with(graph, None)
}

/// Like [`dump_dot`], naming locations after the allocations in `memory`.
///
/// Program order is solid, reads-from dashed, coherence dotted and thread
/// creation or join bold. Reads of global initializers draw their rf edge
/// from a single `init` node.
pub fn dump_dot_with(graph: &ExecutionGraph, memory: Option<&MemoryState>) -> String {
    let mut out = String::from("digraph execution {\n  node [shape=box, fontname=\"monospace\"];\n");
    if graph.rf.iter().any(|e| e.source == RfSource::Init) {
        out.push_str("  init [label=\"init\", shape=ellipse];\n");
    }
    let threads = graph.events.iter().map(|e| e.tid.0 + 1).max().unwrap_or(0);
    for t in 0..threads {
        let _ = writeln!(out, "  subgraph cluster_t{t} {{\n    label=\"t{t}\";");
        for (i, e) in graph.events.iter().enumerate().filter(|(_, e)| e.tid.0 == t) {
            let _ = writeln!(out, "    e{i} [label=\"{}\\n{}\"];", escape(&label(e, memory)), escape(&e.src.to_string()));
        }
        out.push_str("  }\n");
    }
    for (a, b) in &graph.po {
        let _ = writeln!(out, "  e{a} -> e{b} [style=solid];");
    }
    // One rf edge per (source, read) pair even when several byte runs share it.
    let mut rf: Vec<(RfSource, usize)> = Vec::new();
    for e in &graph.rf {
        if !rf.contains(&(e.source, e.read)) {
            rf.push((e.source, e.read));
        }
    }
    for (src, r) in rf {
        let from = match src {
            RfSource::Init => "init".to_string(),
            RfSource::Event(w) => format!("e{w}"),
        };
        let _ = writeln!(out, "  {from} -> e{r} [style=dashed, label=\"rf\"];");
    }
    for (a, b) in &graph.co {
        let _ = writeln!(out, "  e{a} -> e{b} [style=dotted, label=\"co\"];");
    }
    for (a, b) in &graph.tc {
        let _ = writeln!(out, "  e{a} -> e{b} [style=bold, label=\"tc\"];");
    }
    for (a, b) in &graph.tj {
        let _ = writeln!(out, "  e{a} -> e{b} [style=bold, label=\"tj\"];");
    }
    out.push_str("}\n");
    out
}
