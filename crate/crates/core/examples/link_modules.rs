//! Link two modules that call each other, with and without the threading
//! intercept table.

use std::path::PathBuf;

use minimc::driver::read_modules;
use minimc::ir::{link, link_with, print_program};
use minimc::passes::PassConfig;

fn corpus(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus").join(name)
}

fn main() {
    let modules = read_modules(&[corpus("ffi_counter_rust.mcir"), corpus("ffi_counter_c.mcir")]).unwrap();

    // Without the table the threading calls are unresolved.
    if let Err(e) = link(&modules) {
        println!("plain link: {e}");
    }

    let table = PassConfig::default().intercept_table;
    let program = link_with(&modules, &table).unwrap();
    for (symbol, module) in &program.link_map {
        println!("@{symbol} from {module}");
    }
    println!("left external: {:?}", program.externs.keys().collect::<Vec<_>>());
    print!("{}", print_program(&program));
}
