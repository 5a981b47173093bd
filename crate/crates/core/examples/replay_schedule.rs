//! Execute one interleaving chosen by hand and print its events.

use minimc::driver::{build, parse_sources};
use minimc::exec::{format_schedule, parse_schedule, run_schedule, ExecConfig};
use minimc::passes::PassConfig;
use minimc::report::describe_event;

const SOURCE: &str = "\
global @x : i64 = 0

define @child(%arg: i64) {
entry:
  store i64 %arg, @x
  ret 0
}

define @main() {
entry:
  %t = spawn @child(7)
  %v = load i64 @x
  %j = join %t
  ret %v
}
";

fn main() {
    let modules = parse_sources(&[("replay.mcir", SOURCE)]).unwrap();
    let (program, _) = build(&modules, &PassConfig::default()).unwrap();

    // Child first, then main first. Entries name the thread to step; a
    // thread that cannot move is skipped and the run is completed in
    // thread order.
    for text in ["1 0 0", "0 1 0"] {
        let schedule = parse_schedule(text).unwrap();
        let trace = run_schedule(&program, &schedule, &ExecConfig::default()).unwrap();
        println!("schedule {text}:");
        for e in &trace.events {
            println!("  {}  {}", e.tid, describe_event(&trace, e));
        }
        let ret = trace.returns[0].and_then(|v| v.as_int());
        println!("  main returned {}", ret.map_or("nothing".into(), |v| v.to_string()));
        println!("  steps taken: {}", format_schedule(&trace.schedule));
    }
}
