//! Run the transformation pipeline and look at the program after every
//! stage.

use minimc::driver::{link_checked, parse_sources};
use minimc::ir::print_program;
use minimc::passes::{run_pipeline_observed, PassConfig};

const SOURCE: &str = "\
global @ready : i64 = 0

define @main() {
entry:
  %a = alloca 16
  %b = alloca 16
  %unused = alloca 8
  memset %a, 7, 16
  memcpy %b, %a, 16
  br spin
spin:
  %r = load i64 @ready
  %go = icmp ne %r, 0
  br %go, out, spin
out:
  ret
}
";

fn main() {
    let config = PassConfig {
        loop_bound: 2,
        ..PassConfig::default()
    };
    let modules = parse_sources(&[("pipeline.mcir", SOURCE)]).unwrap();
    let program = link_checked(&modules, &config).unwrap();
    let (_, report) = run_pipeline_observed(&program, &config, |stage, p| {
        println!("== after {stage}");
        print!("{}", print_program(p));
    })
    .unwrap();
    println!("== {report}");
    for d in &report.diagnostics {
        println!("note: {d}");
    }
}
