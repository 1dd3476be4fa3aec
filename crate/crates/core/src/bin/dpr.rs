fn main() {
    std::process::exit(dpr::experiments::cli::run_cli(std::env::args_os()));
}
