fn main() {
    std::process::exit(ghz_clock_cli::main_with_args(std::env::args_os()));
}
