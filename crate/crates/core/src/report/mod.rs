//! Rendering of verdicts: a human counterexample with per-thread lanes, a
//! one-line machine record, and Graphviz execution graphs.

mod dot;
mod machine;
mod text;

use std::fmt;

pub use dot::{dump_dot, dump_dot_with};
pub use machine::{machine_report, MachineRecord, RecordError};
pub use text::{
    describe_event, format_counterexample, format_interleaving, format_witness, witness_events,
};

use crate::explore::Verdict;
use crate::passes::PassReport;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ReportOptions {
    /// Show the stores that initialize undef memory. They carry no
    /// information, so they are hidden by default.
    pub show_init: bool,
}

/// Everything printed for one verification run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Report {
    pub verdict: Verdict,
    /// The counterexample text, or a success line.
    pub formatted: String,
    pub passes: PassReport,
}

impl Report {
    pub fn new(verdict: Verdict, passes: PassReport, options: &ReportOptions) -> Report {
        let formatted = format_counterexample(&verdict, options);
        Report {
            verdict,
            formatted,
            passes,
        }
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "passes: {}", self.passes)?;
        f.write_str(&self.formatted)?;
        if !self.formatted.ends_with('\n') {
            writeln!(f)?;
        }
        Ok(())
    }
}
