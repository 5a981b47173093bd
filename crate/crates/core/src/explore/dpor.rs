//! Source-set DPOR with sleep sets over scheduling steps.
//!
//! A step is one scheduling decision (see [`crate::exec`]); two steps are
//! dependent when any of their events are. Exploration is a depth-first
//! search over an explicit stack of nodes, each holding the machine state
//! reached by the steps above it.

use std::collections::BTreeSet;
use std::sync::Arc;
use std::time::Instant;

use super::dependency::{dependent, memory_conflict};
use super::{Collector, ExploreConfig, ExploreError, Verdict, VectorClock};
use crate::exec::{Event, EventKind, Machine, Tid};
use crate::ir::Program;

struct Step {
    tid: Tid,
    events: Vec<Event>,
    /// 1-based position among the steps of `tid`.
    index: u32,
    clock: VectorClock,
}

struct Node {
    machine: Machine,
    started: bool,
    backtrack: BTreeSet<Tid>,
    /// Threads whose next step need not be explored from here, with the
    /// events that step produces.
    sleep: Vec<(Tid, Vec<Event>)>,
}

fn steps_dependent(a: &[Event], b: &[Event]) -> bool {
    a.iter().any(|x| b.iter().any(|y| dependent(x, y)))
}

/// Whether two steps of different threads conflict on memory in a way that
/// could be reordered: no spawn or join forces their order.
fn reversible(a: &Step, b: &Step) -> bool {
    let forced = a.events.iter().any(|x| {
        x.tid == b.tid
            || b.events.iter().any(|y| {
                (x.kind == EventKind::ThreadCreate && x.peer == Some(y.tid))
                    || (x.kind == EventKind::ThreadEnd
                        && y.kind == EventKind::ThreadJoin
                        && y.peer == Some(x.tid))
            })
    });
    !forced
        && a.events
            .iter()
            .any(|x| b.events.iter().any(|y| memory_conflict(x, y)))
}

fn happens_before(steps: &[Step], i: usize, j: usize) -> bool {
    i < j && steps[j].clock.get(steps[i].tid) >= steps[i].index
}

fn make_step(steps: &[Step], tid: Tid, events: Vec<Event>) -> Step {
    let index = steps.iter().filter(|s| s.tid == tid).count() as u32 + 1;
    let mut clock = VectorClock::new();
    for s in steps {
        if s.tid == tid || steps_dependent(&s.events, &events) {
            clock.join(&s.clock);
        }
    }
    clock.set(tid, index);
    Step {
        tid,
        events,
        index,
        clock,
    }
}

/// Adds backtrack points for every race between the newest step and an
/// earlier one.
fn add_backtracks(nodes: &mut [Node], steps: &[Step]) {
    let j = steps.len() - 1;
    for i in (0..j).rev() {
        if steps[i].tid == steps[j].tid || !reversible(&steps[i], &steps[j]) {
            continue;
        }
        let direct = !(i + 1..j).any(|k| happens_before(steps, i, k) && happens_before(steps, k, j));
        if !direct {
            continue;
        }
        // v = steps after i that do not depend on it, followed by j.
        let v: Vec<usize> = (i + 1..j)
            .filter(|&k| !happens_before(steps, i, k))
            .chain(std::iter::once(j))
            .collect();
        let initials: BTreeSet<Tid> = v
            .iter()
            .enumerate()
            .filter(|(n, &s)| !v[..*n].iter().any(|&r| happens_before(steps, r, s)))
            .map(|(_, &s)| steps[s].tid)
            .collect();
        let node = &mut nodes[i];
        if node.backtrack.is_disjoint(&initials) {
            let q = *initials.iter().next().expect("v is non-empty");
            node.backtrack.insert(q);
        }
    }
}

pub(super) fn run(
    program: &Program,
    config: &ExploreConfig,
    observer: &mut dyn FnMut(&crate::exec::Trace),
) -> Result<Verdict, ExploreError> {
    let start = Instant::now();
    let mut col = Collector::new(config, config.record_classes, observer);
    let root = Machine::new(Arc::new(program.clone()), config.exec.clone())?;
    let mut nodes = vec![Node {
        machine: root,
        started: false,
        backtrack: BTreeSet::new(),
        sleep: Vec::new(),
    }];
    let mut steps: Vec<Step> = Vec::new();

    while let Some(top) = nodes.last_mut() {
        if col.stop {
            break;
        }
        if !top.started {
            top.started = true;
            let enabled = top.machine.enabled();
            if enabled.is_empty() {
                col.complete(top.machine.clone().finish());
                nodes.pop();
                steps.pop();
                continue;
            }
            let asleep: BTreeSet<Tid> = top.sleep.iter().map(|(t, _)| *t).collect();
            match enabled.iter().find(|t| !asleep.contains(t)) {
                Some(&p) => {
                    top.backtrack.insert(p);
                }
                None => {
                    col.blocked();
                    nodes.pop();
                    steps.pop();
                    continue;
                }
            }
        }
        let asleep: BTreeSet<Tid> = top.sleep.iter().map(|(t, _)| *t).collect();
        let Some(p) = top.backtrack.difference(&asleep).next().copied() else {
            nodes.pop();
            steps.pop();
            continue;
        };
        let mut child = top.machine.clone();
        let range = child.step(p)?;
        let events = child.events()[range].to_vec();
        let child_sleep: Vec<(Tid, Vec<Event>)> = top
            .sleep
            .iter()
            .filter(|(_, ev)| !steps_dependent(ev, &events))
            .cloned()
            .collect();
        top.sleep.push((p, events.clone()));
        steps.push(make_step(&steps, p, events));
        add_backtracks(&mut nodes, &steps);
        nodes.push(Node {
            machine: child,
            started: false,
            backtrack: BTreeSet::new(),
            sleep: child_sleep,
        });
    }
    col.finish(start.elapsed())
}
