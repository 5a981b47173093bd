use std::fmt::Write as _;

use super::ReportOptions;
use crate::exec::{format_schedule, Event, EventKind, MemLoc, Trace};
use crate::explore::{Verdict, VerdictResult};

fn loc_name(trace: &Trace, loc: &MemLoc) -> String {
    let name = trace.memory.name(loc.alloc);
    let whole = trace
        .memory
        .allocation(loc.alloc)
        .is_some_and(|a| loc.offset == 0 && u64::from(loc.width) == a.size());
    if whole {
        name
    } else {
        format!("{name}[{}..{}]", loc.offset, loc.end())
    }
}

fn access_mode(e: &Event) -> String {
    match (e.atomic, e.ordering) {
        (true, Some(o)) => format!(" {}", o.name()),
        (true, None) => " atomic".into(),
        _ => String::new(),
    }
}

/// One-line description of an event, without its source location.
pub fn describe_event(trace: &Trace, e: &Event) -> String {
    let loc = e.loc.map(|l| loc_name(trace, &l)).unwrap_or_default();
    let val = |v: &Option<crate::exec::Value>| v.map(|v| v.to_string()).unwrap_or_else(|| "?".into());
    match e.kind {
        EventKind::Read => format!("load {loc} = {}{}", val(&e.read), access_mode(e)),
        EventKind::Write if e.init_store => format!("init {loc} = {}", val(&e.written)),
        EventKind::Write => format!("store {loc} = {}{}", val(&e.written), access_mode(e)),
        EventKind::Rmw => format!(
            "rmw {loc} {} -> {}{}",
            val(&e.read),
            val(&e.written),
            access_mode(e)
        ),
        EventKind::ThreadCreate => format!("spawn {}", e.peer.map(|t| t.to_string()).unwrap_or_default()),
        EventKind::ThreadJoin => format!(
            "join {} = {}",
            e.peer.map(|t| t.to_string()).unwrap_or_default(),
            val(&e.read)
        ),
        EventKind::ThreadStart => "start".into(),
        EventKind::ThreadEnd => match e.written {
            Some(v) => format!("end = {v}"),
            None => "end".into(),
        },
        EventKind::Alloc => format!("alloc {loc}"),
        EventKind::AssertFail => "assertion failed".into(),
        EventKind::PanicEvt => match &e.fault {
            Some(f) => format!("fault: {f}"),
            None => "panic".into(),
        },
    }
}

/// Indices of the witness events that are shown.
pub fn witness_events(trace: &Trace, options: &ReportOptions) -> Vec<usize> {
    (0..trace.events.len())
        .filter(|&i| options.show_init || !trace.events[i].init_store)
        .collect()
}

struct Lanes {
    shown: Vec<usize>,
    cells: Vec<String>,
    width: Vec<usize>,
    num: usize,
}

fn lanes(trace: &Trace, options: &ReportOptions, marked: &[usize]) -> Lanes {
    let shown = witness_events(trace, options);
    let threads = trace.events.iter().map(|e| e.tid.0 + 1).max().unwrap_or(0);
    let cells: Vec<String> = shown
        .iter()
        .map(|&i| {
            let e = &trace.events[i];
            let mark = if marked.contains(&i) { "  <--" } else { "" };
            format!("{}  ({}){mark}", describe_event(trace, e), e.src)
        })
        .collect();
    let mut width = vec![4usize; threads];
    for (k, &i) in shown.iter().enumerate() {
        let t = trace.events[i].tid.0;
        width[t] = width[t].max(cells[k].chars().count() + 2);
    }
    let num = shown.len().to_string().len();
    Lanes {
        shown,
        cells,
        width,
        num,
    }
}

/// The interleaving, one line per shown event, each thread in its own
/// column. `marked` events get a trailing arrow.
pub fn format_witness(trace: &Trace, options: &ReportOptions, marked: &[usize]) -> Vec<String> {
    let l = lanes(trace, options, marked);
    let num = l.num;
    l.shown
        .iter()
        .enumerate()
        .map(|(k, &i)| {
            let pad: usize = l.width[..trace.events[i].tid.0].iter().sum();
            format!("{:>num$}  {:pad$}{}", k + 1, "", l.cells[k])
        })
        .collect()
}

fn lane_header(trace: &Trace, options: &ReportOptions, marked: &[usize]) -> String {
    let l = lanes(trace, options, marked);
    let mut out = format!("{:w$}  ", "", w = l.num);
    for (t, w) in l.width.iter().enumerate() {
        let _ = write!(out, "{:<w$}", format!("t{t}"));
    }
    out.trim_end().to_string()
}

fn access_summary(trace: &Trace, i: usize) -> String {
    let e = &trace.events[i];
    let what = match e.kind {
        EventKind::Read => "read",
        EventKind::Write => "write",
        EventKind::Rmw => "read-modify-write",
        _ => e.kind.name(),
    };
    let width = e.loc.map(|l| l.width).unwrap_or(0);
    let atomicity = if e.atomic { "atomic" } else { "non-atomic" };
    format!("{} {what} of {width} bytes, {atomicity}, at {}", e.tid, e.src)
}

fn fault_header(trace: &Trace, title: &str, event: usize) -> String {
    match trace.events.get(event) {
        Some(e) => {
            let detail = e.fault.as_ref().map(|f| format!(": {f}")).unwrap_or_default();
            format!("error: {title} at {} in {}{detail}", e.src, e.tid)
        }
        None => format!("error: {title}"),
    }
}

/// Human-readable account of a verdict: the error, the accesses involved and
/// the full interleaving. An OK verdict yields a one-line summary.
pub fn format_counterexample(verdict: &Verdict, options: &ReportOptions) -> String {
    let mut out = String::new();
    let stats = &verdict.stats;
    let empty = Trace {
        events: Vec::new(),
        memory: Default::default(),
        outcome: crate::exec::Outcome::Completed,
        schedule: Vec::new(),
        returns: Vec::new(),
        notes: Vec::new(),
    };
    let trace = verdict.witness.as_ref().unwrap_or(&empty);
    let marked: Vec<usize> = match &verdict.result {
        VerdictResult::Ok => {
            let _ = writeln!(
                out,
                "verification OK: no errors in {} execution(s)",
                stats.executions
            );
            if stats.bound_exceeded {
                out.push_str("note: loop bound reached; iterations beyond it were not explored\n");
            }
            return out;
        }
        VerdictResult::Unsupported { diagnostic } => {
            let _ = writeln!(out, "error: unsupported construct: {diagnostic}");
            return out;
        }
        VerdictResult::DataRace { first, second } => {
            let loc = trace
                .events
                .get(*first)
                .and_then(|e| e.loc)
                .map(|l| loc_name(trace, &l))
                .unwrap_or_else(|| "?".into());
            let _ = writeln!(out, "error: data race on {loc}");
            for &i in [first, second] {
                if i < trace.events.len() {
                    let _ = writeln!(out, "  {}", access_summary(trace, i));
                }
            }
            vec![*first, *second]
        }
        VerdictResult::AssertViolation { event } => {
            out.push_str(&fault_header(trace, "assertion violation", *event));
            out.push('\n');
            vec![*event]
        }
        VerdictResult::OutOfBounds { event } => {
            out.push_str(&fault_header(trace, "out-of-bounds access", *event));
            out.push('\n');
            vec![*event]
        }
        VerdictResult::UninitializedRead { event } => {
            out.push_str(&fault_header(trace, "uninitialized read", *event));
            out.push('\n');
            vec![*event]
        }
        VerdictResult::Panic { event } => {
            out.push_str(&fault_header(trace, "panic", *event));
            out.push('\n');
            vec![*event]
        }
    };
    if verdict.findings.len() > 1 {
        out.push_str("distinct errors found:\n");
        for f in &verdict.findings {
            let _ = writeln!(out, "  {f}");
        }
    }
    out.push_str(&format_interleaving(trace, options, &marked));
    out
}

/// The titled lane view of a trace followed by its schedule.
pub fn format_interleaving(trace: &Trace, options: &ReportOptions, marked: &[usize]) -> String {
    let mut out = String::new();
    let lines = format_witness(trace, options, marked);
    let _ = writeln!(out, "interleaving ({} events):", lines.len());
    if !lines.is_empty() {
        out.push_str(&lane_header(trace, options, marked));
        out.push('\n');
    }
    for l in lines {
        out.push_str(l.trim_end());
        out.push('\n');
    }
    if !trace.schedule.is_empty() {
        let _ = writeln!(out, "schedule: {}", format_schedule(&trace.schedule));
    }
    out
}
