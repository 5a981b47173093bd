//! Systematic exploration of a program's executions.
//!
//! [`explore`] visits at least one execution of every equivalence class
//! (executions that differ only in the order of independent events are
//! equivalent) using dynamic partial order reduction with source sets and
//! sleep sets. [`explore_naive`] enumerates every interleaving and serves as
//! an oracle for small programs. Each complete execution is checked for
//! faults and for data races.

mod clock;
mod dependency;
mod dpor;
mod graph;
mod naive;
mod race;

use std::collections::BTreeSet;
use std::fmt;
use std::time::Duration;

use thiserror::Error;

use crate::exec::{ExecConfig, ExecError, Fault, Outcome, Trace};
use crate::ir::{InstKind, Program, SrcLoc};

pub use clock::{happens_before, ordered, VectorClock};
pub use dependency::{canonical_form, dependent, memory_conflict, CanonicalForm, EventLabel};
pub use graph::{build_graph, ExecutionGraph, RfEdge, RfSource};
pub use race::{conflicting_accesses, detect_races, Race};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Algorithm {
    #[default]
    Dpor,
    Naive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StopMode {
    #[default]
    FirstError,
    KeepGoing,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExploreConfig {
    pub algorithm: Algorithm,
    pub stop_mode: StopMode,
    pub max_executions: usize,
    /// Largest baseline execution, in scheduling steps, the naive oracle
    /// accepts.
    pub naive_cap: usize,
    /// Keep the canonical form of every explored execution in the verdict.
    pub record_classes: bool,
    pub exec: ExecConfig,
}

impl Default for ExploreConfig {
    fn default() -> Self {
        ExploreConfig {
            algorithm: Algorithm::Dpor,
            stop_mode: StopMode::FirstError,
            max_executions: 100_000,
            naive_cap: 24,
            record_classes: false,
            exec: ExecConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ErrorKind {
    Race,
    Assert,
    OutOfBounds,
    Uninit,
    Panic,
    Unsupported,
}

impl ErrorKind {
    pub fn code(self) -> &'static str {
        match self {
            ErrorKind::Race => "race",
            ErrorKind::Assert => "assert",
            ErrorKind::OutOfBounds => "oob",
            ErrorKind::Uninit => "uninit",
            ErrorKind::Panic => "panic",
            ErrorKind::Unsupported => "unsupported",
        }
    }

    pub fn of_fault(f: &Fault) -> ErrorKind {
        match f {
            Fault::AssertViolation => ErrorKind::Assert,
            Fault::OutOfBounds { .. } => ErrorKind::OutOfBounds,
            Fault::UninitializedRead { .. } => ErrorKind::Uninit,
            Fault::Unsupported(_) => ErrorKind::Unsupported,
            _ => ErrorKind::Panic,
        }
    }
}

/// Outcome of verification. Event indices refer to the witness trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VerdictResult {
    Ok,
    DataRace { first: usize, second: usize },
    AssertViolation { event: usize },
    OutOfBounds { event: usize },
    UninitializedRead { event: usize },
    Panic { event: usize },
    Unsupported { diagnostic: String },
}

impl VerdictResult {
    pub fn kind(&self) -> Option<ErrorKind> {
        Some(match self {
            VerdictResult::Ok => return None,
            VerdictResult::DataRace { .. } => ErrorKind::Race,
            VerdictResult::AssertViolation { .. } => ErrorKind::Assert,
            VerdictResult::OutOfBounds { .. } => ErrorKind::OutOfBounds,
            VerdictResult::UninitializedRead { .. } => ErrorKind::Uninit,
            VerdictResult::Panic { .. } => ErrorKind::Panic,
            VerdictResult::Unsupported { .. } => ErrorKind::Unsupported,
        })
    }

    pub fn code(&self) -> &'static str {
        self.kind().map_or("OK", ErrorKind::code)
    }

    pub fn is_ok(&self) -> bool {
        *self == VerdictResult::Ok
    }

    fn from_fault(event: usize, fault: &Fault) -> VerdictResult {
        match fault {
            Fault::AssertViolation => VerdictResult::AssertViolation { event },
            Fault::OutOfBounds { .. } => VerdictResult::OutOfBounds { event },
            Fault::UninitializedRead { .. } => VerdictResult::UninitializedRead { event },
            Fault::Unsupported(m) => VerdictResult::Unsupported {
                diagnostic: m.clone(),
            },
            _ => VerdictResult::Panic { event },
        }
    }
}

/// A distinct error site: its class and the source locations involved.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Finding {
    pub kind: ErrorKind,
    pub sites: Vec<SrcLoc>,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sites: Vec<String> = self.sites.iter().map(|s| s.to_string()).collect();
        write!(f, "{} at {}", self.kind.code(), sites.join(" / "))
    }
}

#[derive(Debug, Clone, Default)]
pub struct Stats {
    /// Complete executions explored.
    pub executions: usize,
    /// Explorations cut short because every enabled thread was asleep.
    pub blocked: usize,
    pub max_events: usize,
    /// Some execution stopped at a loop or step bound.
    pub bound_exceeded: bool,
    /// Exploration stopped at `max_executions` with classes left.
    pub budget_exhausted: bool,
    pub wall_time: Duration,
}

/// Equality ignores wall time.
impl PartialEq for Stats {
    fn eq(&self, o: &Self) -> bool {
        self.executions == o.executions
            && self.blocked == o.blocked
            && self.max_events == o.max_events
            && self.bound_exceeded == o.bound_exceeded
            && self.budget_exhausted == o.budget_exhausted
    }
}

impl Eq for Stats {}

impl fmt::Display for Stats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "executions={} blocked={} max_events={}",
            self.executions, self.blocked, self.max_events
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub result: VerdictResult,
    /// The execution showing the error; absent for OK and for programs
    /// rejected before exploration.
    pub witness: Option<Trace>,
    pub stats: Stats,
    /// Distinct error sites seen, sorted.
    pub findings: Vec<Finding>,
    /// Canonical forms of the explored executions, when recorded.
    pub classes: Option<BTreeSet<CanonicalForm>>,
}

impl Verdict {
    pub fn error_kinds(&self) -> BTreeSet<ErrorKind> {
        self.findings.iter().map(|f| f.kind).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExploreError {
    #[error("exploration budget of {limit} executions exhausted without finding an error ({stats})")]
    BudgetExceeded { limit: usize, stats: Stats },
    #[error("program needs {steps} steps, above the oracle cap of {cap}")]
    CapExceeded { steps: usize, cap: usize },
    #[error(transparent)]
    Exec(#[from] ExecError),
}

/// Errors found in one complete execution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutionCheck {
    /// The error earliest in trace order, by the position of its (later)
    /// event.
    pub first: Option<VerdictResult>,
    pub findings: Vec<Finding>,
}

pub fn check_execution(trace: &Trace) -> ExecutionCheck {
    let mut findings = Vec::new();
    let mut first: Option<(usize, VerdictResult)> = None;
    let mut consider = |pos: usize, r: VerdictResult| {
        if first.as_ref().is_none_or(|(p, _)| pos < *p) {
            first = Some((pos, r));
        }
    };
    for (i, e) in trace.events.iter().enumerate() {
        if let Some(f) = &e.fault {
            findings.push(Finding {
                kind: ErrorKind::of_fault(f),
                sites: vec![e.src.clone()],
            });
            consider(i, VerdictResult::from_fault(i, f));
        }
    }
    for r in detect_races(trace) {
        findings.push(Finding {
            kind: ErrorKind::Race,
            sites: vec![
                trace.events[r.first].src.clone(),
                trace.events[r.second].src.clone(),
            ],
        });
        consider(
            r.second,
            VerdictResult::DataRace {
                first: r.first,
                second: r.second,
            },
        );
    }
    findings.sort();
    findings.dedup();
    ExecutionCheck {
        first: first.map(|(_, r)| r),
        findings,
    }
}

/// First instruction verification cannot execute: an intrinsic that was not
/// lowered or a call to an unresolved external function.
pub fn unsupported_construct(program: &Program) -> Option<String> {
    program.insts().find_map(|(f, i)| {
        let what = match &i.kind {
            InstKind::Memcpy { .. } => "memcpy",
            InstKind::Memmove { .. } => "memmove",
            InstKind::Memset { .. } => "memset",
            InstKind::ExternCall { func, .. } => {
                return Some(format!(
                    "{}: in @{}: call to external @{func} cannot be verified",
                    i.loc, f.name
                ))
            }
            _ => return None,
        };
        Some(format!(
            "{}: in @{}: unsupported intrinsic {what} was not lowered",
            i.loc, f.name
        ))
    })
}

/// Gathers per-execution results for both exploration algorithms.
pub(crate) struct Collector<'o> {
    config: ExploreConfig,
    observer: &'o mut dyn FnMut(&Trace),
    pub(crate) stats: Stats,
    findings: BTreeSet<Finding>,
    first: Option<(VerdictResult, Trace)>,
    classes: Option<BTreeSet<CanonicalForm>>,
    pub(crate) stop: bool,
}

impl<'o> Collector<'o> {
    pub(crate) fn new(
        config: &ExploreConfig,
        record_classes: bool,
        observer: &'o mut dyn FnMut(&Trace),
    ) -> Self {
        Collector {
            config: config.clone(),
            observer,
            stats: Stats::default(),
            findings: BTreeSet::new(),
            first: None,
            classes: record_classes.then(BTreeSet::new),
            stop: false,
        }
    }

    pub(crate) fn complete(&mut self, trace: Trace) {
        if self.stats.executions >= self.config.max_executions {
            self.stats.budget_exhausted = true;
            self.stop = true;
            return;
        }
        self.stats.executions += 1;
        self.stats.max_events = self.stats.max_events.max(trace.events.len());
        if trace.outcome == Outcome::BoundExceeded {
            self.stats.bound_exceeded = true;
        }
        (self.observer)(&trace);
        if let Some(c) = &mut self.classes {
            // Errors are a property of the class; a repeat adds nothing.
            if !c.insert(canonical_form(&trace.events)) {
                return;
            }
        }
        let check = check_execution(&trace);
        self.findings.extend(check.findings);
        if let Some(r) = check.first {
            if self.first.is_none() {
                self.first = Some((r, trace));
            }
            if self.config.stop_mode == StopMode::FirstError {
                self.stop = true;
            }
        }
    }

    pub(crate) fn blocked(&mut self) {
        self.stats.blocked += 1;
    }

    pub(crate) fn finish(self, elapsed: Duration) -> Result<Verdict, ExploreError> {
        let mut stats = self.stats;
        stats.wall_time = elapsed;
        match self.first {
            Some((result, witness)) => Ok(Verdict {
                result,
                witness: Some(witness),
                stats,
                findings: self.findings.into_iter().collect(),
                classes: self.classes,
            }),
            None if stats.budget_exhausted => Err(ExploreError::BudgetExceeded {
                limit: self.config.max_executions,
                stats,
            }),
            None => Ok(Verdict {
                result: VerdictResult::Ok,
                witness: None,
                stats,
                findings: Vec::new(),
                classes: self.classes,
            }),
        }
    }
}

fn unsupported_verdict(diagnostic: String) -> Verdict {
    Verdict {
        result: VerdictResult::Unsupported { diagnostic },
        witness: None,
        stats: Stats::default(),
        findings: vec![Finding {
            kind: ErrorKind::Unsupported,
            sites: Vec::new(),
        }],
        classes: None,
    }
}

pub fn explore(program: &Program, config: &ExploreConfig) -> Result<Verdict, ExploreError> {
    explore_with(program, config, &mut |_| {})
}

/// Like [`explore`], calling `observer` on every complete execution.
pub fn explore_with(
    program: &Program,
    config: &ExploreConfig,
    observer: &mut dyn FnMut(&Trace),
) -> Result<Verdict, ExploreError> {
    if let Some(d) = unsupported_construct(program) {
        return Ok(unsupported_verdict(d));
    }
    match config.algorithm {
        Algorithm::Dpor => dpor::run(program, config, observer),
        Algorithm::Naive => naive::run(program, config, observer),
    }
}

/// Enumerates every interleaving. Returns the verdict and the number of
/// distinct equivalence classes seen.
pub fn explore_naive(
    program: &Program,
    config: &ExploreConfig,
) -> Result<(Verdict, usize), ExploreError> {
    if let Some(d) = unsupported_construct(program) {
        return Ok((unsupported_verdict(d), 0));
    }
    let v = naive::run(program, config, &mut |_| {})?;
    let n = v.classes.as_ref().map_or(0, |c| c.len());
    Ok((v, n))
}
