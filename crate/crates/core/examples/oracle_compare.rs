//! Compare DPOR with the exhaustive oracle on k writers to one location.
//! Every order of the writes is its own class, so both see k! classes, but
//! the oracle runs many more interleavings.

use std::fmt::Write as _;

use minimc::driver::{build, parse_sources};
use minimc::explore::{explore, Algorithm, ExploreConfig, StopMode};
use minimc::passes::PassConfig;

fn writers(k: usize) -> String {
    let mut s = String::from("global @x : i64 = 0\n");
    for i in 1..=k {
        let _ = writeln!(s, "define @w{i}(%a: i64) {{\n  atomic_store i64 {i}, @x seq_cst\n  ret 0\n}}");
    }
    s.push_str("define @main() {\n");
    for i in 1..=k {
        let _ = writeln!(s, "  %t{i} = spawn @w{i}(0)");
    }
    s.push_str("  ret\n}\n");
    s
}

fn main() {
    for k in 1..=4 {
        let text = writers(k);
        let modules = parse_sources(&[("writers.mcir", &text)]).unwrap();
        let (program, _) = build(&modules, &PassConfig::default()).unwrap();
        let mut row = format!("k={k}");
        for algorithm in [Algorithm::Dpor, Algorithm::Naive] {
            let config = ExploreConfig {
                algorithm,
                stop_mode: StopMode::KeepGoing,
                record_classes: true,
                ..ExploreConfig::default()
            };
            let v = explore(&program, &config).unwrap();
            let classes = v.classes.as_ref().map_or(0, |c| c.len());
            let _ = write!(row, "  {algorithm:?}: {} runs, {classes} classes", v.stats.executions);
        }
        println!("{row}");
    }
}
