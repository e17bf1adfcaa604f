fn main() {
    std::process::exit(sqie::cli::run_cli(std::env::args_os()));
}
