fn main() {
    std::process::exit(minimc::cli::main());
}
