fn main() {
    std::process::exit(strategic_insider::cli::main_with_args(std::env::args_os()));
}
