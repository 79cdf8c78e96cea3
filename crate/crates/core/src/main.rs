fn main() {
    std::process::exit(cartel::cli::run_cli(std::env::args_os()));
}
