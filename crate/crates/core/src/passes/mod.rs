//! Program-to-program transformations run between linking and verification.
//!
//! [`run_pipeline`] applies them in a fixed order: thread interception, loop
//! bounding, intrinsic lowering, undef initialization, dead-allocation
//! elimination. Every pass is idempotent.

mod bound;
mod dead;
mod intercept;
mod lower;
mod undef;

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::ir::{Diagnostic, Function, InterceptTable, Program};

pub use bound::bound_loops;
pub use dead::eliminate_dead_allocs;
pub use intercept::{intercept_threads, InterceptError};
pub use lower::lower_intrinsics;
pub use undef::init_undef;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PassConfig {
    pub loop_bound: u32,
    pub memcpy_chunk_limit: u64,
    pub intercept: bool,
    pub bound_loops: bool,
    pub lower_intrinsics: bool,
    pub init_undef: bool,
    pub dead_alloc: bool,
    pub intercept_table: InterceptTable,
}

impl Default for PassConfig {
    fn default() -> Self {
        PassConfig {
            loop_bound: 10,
            memcpy_chunk_limit: 64,
            intercept: true,
            bound_loops: true,
            lower_intrinsics: true,
            init_undef: true,
            dead_alloc: true,
            intercept_table: InterceptTable::default(),
        }
    }
}

impl PassConfig {
    pub fn check(&self) -> Result<(), PassError> {
        if self.loop_bound < 1 {
            return Err(PassError::Config("loop bound must be at least 1".into()));
        }
        if self.memcpy_chunk_limit < 8 || !self.memcpy_chunk_limit.is_multiple_of(8) {
            return Err(PassError::Config(
                "chunk limit must be a multiple of 8 and at least 8".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PassError {
    #[error(transparent)]
    Intercept(#[from] InterceptError),
    #[error("invalid pass configuration: {0}")]
    Config(String),
}

/// What the passes changed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PassReport {
    pub calls_intercepted: usize,
    pub loops_bounded: usize,
    pub intrinsics_lowered: usize,
    pub undef_stores: usize,
    pub allocas_removed: usize,
    pub diagnostics: Vec<Diagnostic>,
}

impl PassReport {
    pub fn merge(&mut self, other: PassReport) {
        self.calls_intercepted += other.calls_intercepted;
        self.loops_bounded += other.loops_bounded;
        self.intrinsics_lowered += other.intrinsics_lowered;
        self.undef_stores += other.undef_stores;
        self.allocas_removed += other.allocas_removed;
        self.diagnostics.extend(other.diagnostics);
    }
}

impl fmt::Display for PassReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "intercepted={} loops_bounded={} intrinsics_lowered={} undef_stores={} allocas_removed={}",
            self.calls_intercepted,
            self.loops_bounded,
            self.intrinsics_lowered,
            self.undef_stores,
            self.allocas_removed
        )
    }
}

/// Points in the pipeline at which the program can be dumped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Linked,
    Intercept,
    BoundLoops,
    LowerIntrinsics,
    InitUndef,
    DeadAlloc,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::Linked,
        Stage::Intercept,
        Stage::BoundLoops,
        Stage::LowerIntrinsics,
        Stage::InitUndef,
        Stage::DeadAlloc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Linked => "linked",
            Stage::Intercept => "intercept",
            Stage::BoundLoops => "bound-loops",
            Stage::LowerIntrinsics => "lower-intrinsics",
            Stage::InitUndef => "init-undef",
            Stage::DeadAlloc => "dead-alloc",
        }
    }

    /// Accepts the stage names plus `final` for the last stage.
    pub fn from_name(s: &str) -> Option<Stage> {
        if s == "final" {
            return Some(Stage::DeadAlloc);
        }
        Stage::ALL.into_iter().find(|st| st.name() == s)
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub fn run_pipeline(
    program: &Program,
    config: &PassConfig,
) -> Result<(Program, PassReport), PassError> {
    run_pipeline_observed(program, config, |_, _| {})
}

/// Like [`run_pipeline`], calling `observe` with the program after every
/// stage. Disabled passes still produce a stage (equal to the previous one).
pub fn run_pipeline_observed(
    program: &Program,
    config: &PassConfig,
    mut observe: impl FnMut(Stage, &Program),
) -> Result<(Program, PassReport), PassError> {
    config.check()?;
    let mut report = PassReport::default();
    let mut p = program.clone();
    observe(Stage::Linked, &p);

    if config.intercept {
        let (q, r) = intercept_threads(&p, &config.intercept_table)?;
        p = q;
        report.merge(r);
    }
    observe(Stage::Intercept, &p);

    type Pass<'a> = Box<dyn Fn(&Program) -> (Program, PassReport) + 'a>;
    let rest: [(bool, Stage, Pass); 4] = [
        (
            config.bound_loops,
            Stage::BoundLoops,
            Box::new(|p: &Program| bound_loops(p, config.loop_bound)),
        ),
        (
            config.lower_intrinsics,
            Stage::LowerIntrinsics,
            Box::new(|p: &Program| lower_intrinsics(p, config.memcpy_chunk_limit)),
        ),
        (config.init_undef, Stage::InitUndef, Box::new(init_undef)),
        (config.dead_alloc, Stage::DeadAlloc, Box::new(eliminate_dead_allocs)),
    ];
    for (enabled, stage, pass) in rest {
        if enabled {
            let (q, r) = pass(&p);
            p = q;
            report.merge(r);
        }
        observe(stage, &p);
    }
    Ok((p, report))
}

/// Generates register and label names not yet used in a function.
pub(crate) struct Fresh {
    used: BTreeSet<String>,
}

impl Fresh {
    pub(crate) fn new(f: &Function) -> Self {
        let mut used = BTreeSet::new();
        for p in &f.params {
            used.insert(p.name.clone());
        }
        for b in &f.blocks {
            used.insert(b.label.clone());
            for i in &b.insts {
                if let Some(r) = &i.result {
                    used.insert(r.clone());
                }
                for op in i.kind.operands() {
                    if let Some(r) = op.as_reg() {
                        used.insert(r.to_string());
                    }
                }
            }
        }
        Fresh { used }
    }

    /// Smallest `n` such that `{prefix}{n}` and every `{prefix}{n}_*` name
    /// in `suffixes` are unused; reserves them.
    pub(crate) fn index(&mut self, prefix: &str, suffixes: &[&str]) -> usize {
        let mut n = 0;
        loop {
            let base = format!("{prefix}{n}");
            let taken = self.used.contains(&base)
                || self
                    .used
                    .iter()
                    .any(|u| u.starts_with(&format!("{base}_")));
            if !taken {
                self.used.insert(base.clone());
                for s in suffixes {
                    self.used.insert(format!("{base}_{s}"));
                }
                return n;
            }
            n += 1;
        }
    }
}
