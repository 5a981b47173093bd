//! The `minimc` command line.
//!
//! Exit codes: 0 verified OK, 1 bug found, 2 usage, input or oracle-cap
//! error, 3 unsupported construct, 4 execution budget exhausted without a
//! bug. The machine record is the last line of stdout unless
//! `--machine-out` redirects it.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Parser;

use crate::driver::{link_checked, read_modules, DriverError};
use crate::exec::{parse_schedule, run_schedule, Outcome, Trace};
use crate::explore::{
    build_graph, check_execution, explore_with, Algorithm, ExploreConfig, ExploreError, Stats,
    StopMode, Verdict, VerdictResult,
};
use crate::ir::print_program;
use crate::passes::{run_pipeline_observed, PassConfig, Stage};
use crate::report::{dump_dot_with, format_interleaving, MachineRecord, Report, ReportOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_BUG: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_UNSUPPORTED: i32 = 3;
pub const EXIT_BUDGET: i32 = 4;

fn parse_stage(s: &str) -> Result<Stage, String> {
    Stage::from_name(s).ok_or_else(|| {
        let names: Vec<&str> = Stage::ALL.iter().map(|s| s.name()).collect();
        format!("unknown stage {s:?}; expected one of {}, final", names.join(", "))
    })
}

/// Model-check concurrent MCIR programs.
#[derive(Debug, Clone, Parser)]
#[command(name = "minimc", version)]
pub struct Cli {
    /// MCIR modules to link and verify.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Loop bound: iterations allowed per loop entry.
    #[arg(long, value_name = "K", default_value_t = 10)]
    pub unroll: u32,
    /// Largest constant length, in bytes, that memory intrinsics are lowered for.
    #[arg(long, value_name = "BYTES", default_value_t = 64)]
    pub chunk_limit: u64,
    /// Keep thread_spawn/thread_join calls external instead of turning them into spawn and join.
    #[arg(long)]
    pub no_intercept: bool,
    /// Leave memcpy, memmove and memset unlowered.
    #[arg(long)]
    pub no_lower_intrinsics: bool,
    /// Skip storing undef into fresh allocations, so reading never-written bytes faults.
    #[arg(long)]
    pub no_init_undef: bool,
    /// Keep allocations that are never accessed.
    #[arg(long)]
    pub no_dead_alloc: bool,
    /// Enumerate every interleaving instead of using partial order reduction.
    #[arg(long)]
    pub oracle: bool,
    /// Stop after this many executions; exit 4 if no error was found.
    #[arg(long, value_name = "N", default_value_t = 100_000)]
    pub max_execs: usize,
    /// Keep exploring after the first error and list every distinct one.
    #[arg(long)]
    pub keep_going: bool,
    /// Print exploration statistics.
    #[arg(long)]
    pub stats: bool,
    /// Print the program after a pipeline stage (linked, intercept,
    /// bound-loops, lower-intrinsics, init-undef, dead-alloc or final).
    #[arg(long, value_name = "STAGE", value_parser = parse_stage)]
    pub dump_ir: Option<Stage>,
    /// Write the witness execution graph here, or one graph per explored
    /// execution if the path is a directory.
    #[arg(long, value_name = "PATH")]
    pub dot: Option<PathBuf>,
    /// Replay one schedule (thread ids, one per step) instead of exploring.
    #[arg(long, value_name = "FILE")]
    pub trace: Option<PathBuf>,
    /// Show the stores that initialize undef memory in witnesses.
    #[arg(long)]
    pub show_init: bool,
    /// Write the machine record to a file instead of stdout.
    #[arg(long, value_name = "PATH")]
    pub machine_out: Option<PathBuf>,
    /// Suppress the human-readable report.
    #[arg(short, long)]
    pub quiet: bool,
}

impl Cli {
    pub fn pass_config(&self) -> PassConfig {
        PassConfig {
            loop_bound: self.unroll,
            memcpy_chunk_limit: self.chunk_limit,
            intercept: !self.no_intercept,
            lower_intrinsics: !self.no_lower_intrinsics,
            init_undef: !self.no_init_undef,
            dead_alloc: !self.no_dead_alloc,
            ..PassConfig::default()
        }
    }

    pub fn explore_config(&self) -> ExploreConfig {
        ExploreConfig {
            algorithm: if self.oracle {
                Algorithm::Naive
            } else {
                Algorithm::Dpor
            },
            stop_mode: if self.keep_going {
                StopMode::KeepGoing
            } else {
                StopMode::FirstError
            },
            max_executions: self.max_execs,
            ..ExploreConfig::default()
        }
    }

    fn report_options(&self) -> ReportOptions {
        ReportOptions {
            show_init: self.show_init,
        }
    }
}

pub fn main() -> i32 {
    let mut out = std::io::stdout().lock();
    let mut err = std::io::stderr().lock();
    run(std::env::args_os(), &mut out, &mut err)
}

/// Runs the command line with the given arguments (program name first),
/// writing to `out` and `err`. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            let code = e.exit_code();
            let sink: &mut dyn Write = if code == 0 { out } else { err };
            let _ = write!(sink, "{text}");
            return code;
        }
    };
    match execute(&cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Driver(#[from] DriverError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {message}", path.display())]
    Schedule { path: PathBuf, message: String },
    #[error(transparent)]
    Explore(ExploreError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn exit_code(v: &Verdict) -> i32 {
    match v.result {
        VerdictResult::Ok => EXIT_OK,
        VerdictResult::Unsupported { .. } => EXIT_UNSUPPORTED,
        _ => EXIT_BUG,
    }
}

fn emit_record(cli: &Cli, record: &MachineRecord, out: &mut dyn Write) -> Result<(), CliError> {
    match &cli.machine_out {
        Some(p) => std::fs::write(p, format!("{record}\n")).map_err(io_err(p)),
        None => {
            let _ = writeln!(out, "{record}");
            Ok(())
        }
    }
}

fn write_dot(path: &Path, trace: &Trace) -> Result<(), CliError> {
    let text = dump_dot_with(&build_graph(trace), Some(&trace.memory));
    std::fs::write(path, text).map_err(io_err(path))
}

fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let passes = cli.pass_config();
    let modules = read_modules(&cli.inputs)?;
    let linked = link_checked(&modules, &passes)?;
    let (program, pass_report) = run_pipeline_observed(&linked, &passes, |stage, p| {
        if Some(stage) == cli.dump_ir {
            let _ = write!(out, "{}", print_program(p));
        }
    })
    .map_err(DriverError::from)?;
    for d in &pass_report.diagnostics {
        let _ = writeln!(err, "warning: {d}");
    }
    let config = cli.explore_config();

    if let Some(path) = &cli.trace {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let schedule = parse_schedule(&text).map_err(|e| CliError::Schedule {
            path: path.clone(),
            message: e.to_string(),
        })?;
        let trace = run_schedule(&program, &schedule, &config.exec).map_err(|e| CliError::Explore(e.into()))?;
        return replay(cli, trace, out, err);
    }

    let dot_dir = cli.dot.as_ref().filter(|p| p.is_dir()).cloned();
    let mut first: Option<Trace> = None;
    let mut count = 0usize;
    let mut dot_failure = None;
    let result = explore_with(&program, &config, &mut |t: &Trace| {
        count += 1;
        if let Some(dir) = &dot_dir {
            let p = dir.join(format!("exec-{count:05}.dot"));
            if let Err(e) = write_dot(&p, t) {
                dot_failure.get_or_insert(e);
            }
        } else if first.is_none() && cli.dot.is_some() {
            first = Some(t.clone());
        }
    });
    if let Some(e) = dot_failure {
        return Err(e);
    }
    let verdict = match result {
        Ok(v) => v,
        Err(ExploreError::BudgetExceeded { limit, stats }) => {
            return budget(cli, limit, &stats, out, err);
        }
        Err(e) => return Err(CliError::Explore(e)),
    };

    if let (Some(path), None) = (&cli.dot, &dot_dir) {
        match verdict.witness.as_ref().or(first.as_ref()) {
            Some(t) => write_dot(path, t)?,
            None => {
                let _ = writeln!(err, "note: no execution to draw; {} not written", path.display());
            }
        }
    }
    if !cli.quiet {
        let report = Report::new(verdict.clone(), pass_report, &cli.report_options());
        let _ = write!(out, "{report}");
    }
    if let VerdictResult::Unsupported { diagnostic } = &verdict.result {
        let _ = writeln!(err, "error: {diagnostic}");
    }
    if cli.stats {
        let _ = writeln!(out, "stats: {}", verdict.stats);
    }
    emit_record(cli, &MachineRecord::from_verdict(&verdict), out)?;
    Ok(exit_code(&verdict))
}

fn budget(
    cli: &Cli,
    limit: usize,
    stats: &Stats,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, CliError> {
    let _ = writeln!(
        err,
        "error: explored {limit} executions without finding an error and without finishing"
    );
    if cli.stats {
        let _ = writeln!(out, "stats: {stats}");
    }
    emit_record(cli, &MachineRecord::budget(stats), out)?;
    Ok(EXIT_BUDGET)
}

fn outcome_text(trace: &Trace) -> String {
    match &trace.outcome {
        Outcome::Completed => "completed".into(),
        Outcome::Faulted { event, fault } => format!("faulted at event {event}: {fault}"),
        Outcome::BoundExceeded => "bound exceeded".into(),
        Outcome::Blocked => "blocked".into(),
    }
}

fn replay(cli: &Cli, trace: Trace, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    for note in &trace.notes {
        let _ = writeln!(err, "note: {note}");
    }
    let check = check_execution(&trace);
    let marked = match check.first {
        Some(VerdictResult::DataRace { first, second }) => vec![first, second],
        _ => trace.fault_event().into_iter().collect(),
    };
    let _ = write!(out, "{}", format_interleaving(&trace, &cli.report_options(), &marked));
    let _ = writeln!(out, "outcome: {}", outcome_text(&trace));
    if let Some(path) = &cli.dot {
        write_dot(path, &trace)?;
    }
    let verdict = Verdict {
        result: check.first.unwrap_or(VerdictResult::Ok),
        stats: Stats {
            executions: 1,
            max_events: trace.events.len(),
            bound_exceeded: trace.outcome == Outcome::BoundExceeded,
            ..Stats::default()
        },
        witness: Some(trace),
        findings: check.findings,
        classes: None,
    };
    for f in &verdict.findings {
        let _ = writeln!(out, "finding: {f}");
    }
    if cli.stats {
        let _ = writeln!(out, "stats: {}", verdict.stats);
    }
    emit_record(cli, &MachineRecord::from_verdict(&verdict), out)?;
    Ok(exit_code(&verdict))
}
