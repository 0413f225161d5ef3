fn main() {
    std::process::exit(flamefront::harness::cli::run_cli(std::env::args_os()));
}
