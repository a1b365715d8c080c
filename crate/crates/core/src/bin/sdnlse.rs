fn main() {
    std::process::exit(sdnlse::cli::run_cli(std::env::args_os()));
}
