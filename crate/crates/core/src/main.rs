fn main() {
    std::process::exit(unicls::cli::run_cli(std::env::args_os()));
}
