//! Find the data races of one execution and render its execution graph.

use minimc::driver::{build, parse_sources};
use minimc::exec::{run_schedule, ExecConfig, Tid};
use minimc::explore::{build_graph, detect_races, happens_before, ordered};
use minimc::passes::PassConfig;
use minimc::report::{describe_event, dump_dot_with};

const SOURCE: &str = "\
global @data : i64 = 0
global @flag : i64 = 0

define @producer(%arg: i64) {
entry:
  store i64 42, @data
  atomic_store i64 1, @flag release
  ret 0
}

define @main() {
entry:
  %t = spawn @producer(0)
  %f = atomic_load i64 @flag acquire
  %d = load i64 @data
  %j = join %t
  ret %d
}
";

fn main() {
    let modules = parse_sources(&[("graph.mcir", SOURCE)]).unwrap();
    let (program, _) = build(&modules, &PassConfig::default()).unwrap();

    // Main reads the flag before the producer sets it: @data races.
    let early = run_schedule(&program, &[0, 0, 1, 1].map(Tid), &ExecConfig::default()).unwrap();
    // The producer finishes first: the flag orders the accesses.
    let late = run_schedule(&program, &[1, 1, 1, 0].map(Tid), &ExecConfig::default()).unwrap();

    for (name, trace) in [("early", &early), ("late", &late)] {
        let races = detect_races(trace);
        println!("{name}: {} race(s)", races.len());
        for r in &races {
            let (a, b) = (&trace.events[r.first], &trace.events[r.second]);
            println!("  {} | {}", describe_event(trace, a), describe_event(trace, b));
        }
        let clocks = happens_before(trace);
        let accesses: Vec<usize> = (0..trace.events.len()).filter(|&i| trace.events[i].is_access()).collect();
        for &i in &accesses {
            for &j in accesses.iter().filter(|&&j| j > i) {
                if ordered(trace, &clocks, i, j) && trace.events[i].tid != trace.events[j].tid {
                    println!("  hb: {} -> {}", describe_event(trace, &trace.events[i]), describe_event(trace, &trace.events[j]));
                }
            }
        }
    }
    print!("{}", dump_dot_with(&build_graph(&early), Some(&early.memory)));
}
