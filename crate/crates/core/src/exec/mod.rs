//! Deterministic interpreter for transformed programs.
//!
//! A [`Machine`] holds the state of every thread plus memory. Threads are
//! always parked in front of a *shared* instruction: a load, a store, an
//! atomic read-modify-write, a join, or the final return of the thread. One
//! call to [`Machine::step`] executes the parked instruction of one thread,
//! then runs that thread's thread-local instructions (arithmetic, branches,
//! calls, allocas, undef initialization, spawns, asserts) until it parks
//! again. Scheduling decisions therefore only happen where threads can
//! interfere.
//!
//! Execution is sequentially consistent: every read returns the bytes most
//! recently written in trace order.

mod machine;
mod memory;

use std::fmt;

use thiserror::Error;

use crate::ir::{Ordering, SrcLoc};

pub use machine::{run_schedule, ExecConfig, ExecError, Machine, ThreadStatus};
pub use memory::{Allocation, Byte, MemError, MemoryState};

/// Thread id: main is 0, spawned threads are numbered in spawn order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Tid(pub usize);

impl fmt::Display for Tid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t{}", self.0)
    }
}

/// Allocation identity. Stack allocations are numbered per thread so the same
/// allocation gets the same id in every interleaving.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AllocId {
    Global(u32),
    Stack { tid: Tid, index: u32 },
}

impl fmt::Display for AllocId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AllocId::Global(i) => write!(f, "g{i}"),
            AllocId::Stack { tid, index } => write!(f, "{tid}.a{index}"),
        }
    }
}

/// A byte range of one allocation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MemLoc {
    pub alloc: AllocId,
    pub offset: i64,
    pub width: u32,
}

impl MemLoc {
    pub fn end(&self) -> i64 {
        self.offset + self.width as i64
    }

    pub fn overlaps(&self, other: &MemLoc) -> bool {
        self.alloc == other.alloc && self.offset < other.end() && other.offset < self.end()
    }
}

impl fmt::Display for MemLoc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}..{}]", self.alloc, self.offset, self.end())
    }
}

/// A runtime value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Value {
    /// Integer of `width` bytes, stored sign-extended.
    Int { width: u8, value: i64 },
    Ptr { alloc: AllocId, offset: i64 },
    Undef,
    Thread(Tid),
}

impl Value {
    pub fn int(width: u8, value: i64) -> Value {
        Value::Int {
            width,
            value: sign_extend(width, value),
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int { value, .. } => Some(*value),
            Value::Thread(t) => Some(t.0 as i64),
            Value::Undef => Some(0),
            Value::Ptr { .. } => None,
        }
    }
}

pub(crate) fn sign_extend(width: u8, value: i64) -> i64 {
    let bits = width as u32 * 8;
    if bits >= 64 {
        value
    } else {
        let shift = 64 - bits;
        (value << shift) >> shift
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int { value, .. } => write!(f, "{value}"),
            Value::Ptr { alloc, offset } => write!(f, "&{alloc}+{offset}"),
            Value::Undef => f.write_str("undef"),
            Value::Thread(t) => write!(f, "{t}"),
        }
    }
}

/// Errors raised by executing an instruction. Each one stops the faulting
/// thread; the first one in trace order becomes the trace outcome.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Fault {
    #[error("out-of-bounds access to {loc} (allocation size {size})")]
    OutOfBounds { loc: MemLoc, size: u64 },
    #[error("read of uninitialized memory {loc}")]
    UninitializedRead { loc: MemLoc },
    #[error("assertion failed")]
    AssertViolation,
    #[error("panic: {0}")]
    Panic(String),
    #[error("call depth bound {0} exceeded")]
    CallDepthExceeded(usize),
    #[error("invalid operation: {0}")]
    InvalidOperation(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    /// Malformed IR reached the interpreter. Validation rules out every
    /// case that produces this.
    #[error("malformed program: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EventKind {
    Read,
    Write,
    Rmw,
    ThreadCreate,
    ThreadJoin,
    AssertFail,
    PanicEvt,
    Alloc,
    ThreadStart,
    ThreadEnd,
}

impl EventKind {
    pub fn name(self) -> &'static str {
        match self {
            EventKind::Read => "read",
            EventKind::Write => "write",
            EventKind::Rmw => "rmw",
            EventKind::ThreadCreate => "spawn",
            EventKind::ThreadJoin => "join",
            EventKind::AssertFail => "assert-fail",
            EventKind::PanicEvt => "panic",
            EventKind::Alloc => "alloc",
            EventKind::ThreadStart => "start",
            EventKind::ThreadEnd => "end",
        }
    }
}

/// One action of one thread.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub tid: Tid,
    /// Position in the thread's program order.
    pub seq: u32,
    pub kind: EventKind,
    pub loc: Option<MemLoc>,
    pub read: Option<Value>,
    pub written: Option<Value>,
    pub atomic: bool,
    pub ordering: Option<Ordering>,
    /// Written by an undef store: initializes memory, never races.
    pub init_store: bool,
    /// Child for `ThreadCreate`, joined thread for `ThreadJoin`.
    pub peer: Option<Tid>,
    pub fault: Option<Fault>,
    pub src: SrcLoc,
}

impl Event {
    pub fn is_access(&self) -> bool {
        matches!(self.kind, EventKind::Read | EventKind::Write | EventKind::Rmw)
    }

    pub fn is_write(&self) -> bool {
        matches!(self.kind, EventKind::Write | EventKind::Rmw)
    }

    pub fn is_read(&self) -> bool {
        matches!(self.kind, EventKind::Read | EventKind::Rmw)
    }

    /// Memory bytes this event observes or modifies for the purpose of
    /// conflicts, with whether it writes. Init stores have none. A read that
    /// faulted on uninitialized bytes still observed them.
    pub fn footprint(&self) -> Option<(MemLoc, bool)> {
        match (&self.kind, &self.fault) {
            (EventKind::Read | EventKind::Write | EventKind::Rmw, _) if !self.init_store => {
                self.loc.map(|l| (l, self.is_write()))
            }
            (EventKind::PanicEvt, Some(Fault::UninitializedRead { loc })) => Some((*loc, false)),
            _ => None,
        }
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let loc = self.loc.map(|l| l.to_string()).unwrap_or_else(|| "-".into());
        let width = self.loc.map(|l| l.width.to_string()).unwrap_or_else(|| "-".into());
        let value = match (&self.read, &self.written, self.peer) {
            (Some(r), Some(w), _) => format!("{r}->{w}"),
            (Some(r), None, _) => r.to_string(),
            (None, Some(w), _) => w.to_string(),
            (None, None, Some(p)) => p.to_string(),
            (None, None, None) => "-".into(),
        };
        let ord = self.ordering.map(|o| o.name()).unwrap_or("-");
        write!(
            f,
            "{} {} {} {} {} {} {} {} {}",
            self.tid.0,
            self.seq,
            self.kind.name(),
            loc,
            width,
            value,
            if self.atomic { "atomic" } else { "plain" },
            ord,
            self.src
        )
    }
}

/// How an execution ended.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Completed,
    /// `event` indexes the first fault event of the trace.
    Faulted { event: usize, fault: Fault },
    /// Some thread hit the loop bound; not a bug.
    BoundExceeded,
    /// Threads remain blocked on joins that can never complete.
    Blocked,
}

/// One complete execution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub events: Vec<Event>,
    pub memory: MemoryState,
    pub outcome: Outcome,
    /// Thread chosen at each step; replaying it reproduces the trace.
    pub schedule: Vec<Tid>,
    /// Return value of each thread that finished.
    pub returns: Vec<Option<Value>>,
    pub notes: Vec<String>,
}

impl Trace {
    pub fn thread_count(&self) -> usize {
        self.returns.len()
    }

    pub fn fault_event(&self) -> Option<usize> {
        match self.outcome {
            Outcome::Faulted { event, .. } => Some(event),
            _ => None,
        }
    }

    /// Events of one thread, in program order.
    pub fn thread_events(&self, tid: Tid) -> impl Iterator<Item = (usize, &Event)> {
        self.events
            .iter()
            .enumerate()
            .filter(move |(_, e)| e.tid == tid)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("schedule line {line}: bad thread id {token:?}")]
pub struct ScheduleError {
    pub line: usize,
    pub token: String,
}

/// Reads a schedule: thread ids (`3` or `t3`) separated by whitespace or
/// commas. `#` starts a comment.
pub fn parse_schedule(text: &str) -> Result<Vec<Tid>, ScheduleError> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("");
        for tok in line.split(|c: char| c.is_whitespace() || c == ',') {
            if tok.is_empty() {
                continue;
            }
            let digits = tok.strip_prefix('t').unwrap_or(tok);
            let id = digits.parse::<usize>().map_err(|_| ScheduleError {
                line: n + 1,
                token: tok.to_string(),
            })?;
            out.push(Tid(id));
        }
    }
    Ok(out)
}

/// Inverse of [`parse_schedule`]: ids separated by single spaces.
pub fn format_schedule(schedule: &[Tid]) -> String {
    let ids: Vec<String> = schedule.iter().map(|t| t.0.to_string()).collect();
    ids.join(" ")
}
