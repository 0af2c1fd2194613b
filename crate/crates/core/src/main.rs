fn main() {
    if let Err(e) = baq::harness::cli::run_from(std::env::args_os()) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
