fn main() {
    // CLI wiring lands once the pipeline modules exist.
    eprintln!("cdn: not yet wired");
    std::process::exit(1);
}
