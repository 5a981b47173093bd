//! Verify every bundled corpus program with DPOR and print the verdicts.

use std::path::PathBuf;

use minimc::driver::verify_files;
use minimc::explore::ExploreConfig;
use minimc::passes::PassConfig;

fn main() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus");
    let sets: &[&[&str]] = &[
        &["ffi_counter_rust.mcir", "ffi_counter_c.mcir"],
        &["rand_atomicity.mcir"],
        &["unsafe_sync.mcir"],
        &["oob_index.mcir"],
        &["raw_ptr.mcir"],
        &["undef_result.mcir"],
    ];
    for set in sets {
        let paths: Vec<PathBuf> = set.iter().map(|n| dir.join(n)).collect();
        let (verdict, _) = verify_files(&paths, &PassConfig::default(), &ExploreConfig::default()).unwrap();
        println!("{:<44} {:<8} {}", set.join(" + "), verdict.result.code(), verdict.stats);
    }
}
