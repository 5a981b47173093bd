//! Parse an MCIR module, validate it and print it back.

use minimc::ir::{link, parse_module, print_module, validate};

const SOURCE: &str = "\
global @flag : i64 = 0

define @main() {
entry:
  %v = atomic_load i64 @flag acquire
  %set = icmp ne %v, 0
  br %set, done, write
write:
  atomic_store i64 1, @flag release
  br done
done:
  ret
}
";

fn main() {
    let module = parse_module("flag.mcir", SOURCE).expect("valid MCIR");
    let printed = print_module(&module);
    print!("{printed}");

    // Printing is a fixed point of parsing.
    let again = parse_module("flag.mcir", &printed).unwrap();
    assert_eq!(print_module(&again), printed);

    let program = link(&[module]).unwrap();
    let diags = validate(&program);
    println!("validation: {} diagnostic(s)", diags.len());

    match parse_module("bad.mcir", "define @main() {\n  %x = lod i64 @g\n}\n") {
        Ok(_) => unreachable!(),
        Err(e) => println!("parse error: {e}"),
    }
}
