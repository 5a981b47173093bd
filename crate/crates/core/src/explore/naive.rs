use std::sync::Arc;
use std::time::Instant;

use super::{Collector, ExploreConfig, ExploreError, Verdict};
use crate::exec::{Machine, Trace};
use crate::ir::Program;

/// Exhaustive depth-first enumeration of every schedule.
pub(super) fn run(
    program: &Program,
    config: &ExploreConfig,
    observer: &mut dyn FnMut(&Trace),
) -> Result<Verdict, ExploreError> {
    let start = Instant::now();
    let root = Machine::new(Arc::new(program.clone()), config.exec.clone())?;

    let mut baseline = root.clone();
    while let Some(&t) = baseline.enabled().first() {
        baseline.step(t)?;
        if baseline.steps() > config.naive_cap {
            return Err(ExploreError::CapExceeded {
                steps: baseline.steps(),
                cap: config.naive_cap,
            });
        }
    }

    let mut col = Collector::new(config, true, observer);
    // Each entry: a state and the threads still to try from it.
    let mut stack = vec![(root.clone(), root.enabled())];
    while let Some((m, todo)) = stack.last_mut() {
        if col.stop {
            break;
        }
        if m.enabled().is_empty() {
            col.complete(m.clone().finish());
            stack.pop();
            continue;
        }
        if todo.is_empty() {
            stack.pop();
            continue;
        }
        let t = todo.remove(0);
        let mut child = m.clone();
        child.step(t)?;
        let next = child.enabled();
        stack.push((child, next));
    }
    col.finish(start.elapsed())
}
