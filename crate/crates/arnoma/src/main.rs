fn main() {
    std::process::exit(arnoma::cli::run_from_args(std::env::args_os()));
}
