//! Print the counterexample for the cached-availability bug and its
//! machine-readable record.

use std::path::PathBuf;

use minimc::driver::verify_files;
use minimc::explore::ExploreConfig;
use minimc::passes::PassConfig;
use minimc::report::{MachineRecord, Report, ReportOptions};

fn main() {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus/rand_atomicity.mcir");
    let (verdict, passes) = verify_files(&[path], &PassConfig::default(), &ExploreConfig::default()).unwrap();
    let record = MachineRecord::from_verdict(&verdict);
    let report = Report::new(verdict, passes, &ReportOptions::default());
    print!("{report}");

    let line = record.to_string();
    println!("{line}");
    let parsed: MachineRecord = line.parse().unwrap();
    assert_eq!(parsed, record);
    println!("parsed back: result={} evA={:?}", parsed.result, parsed.ev_a);
}
