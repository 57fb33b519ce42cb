fn main() {
    std::process::exit(toricq_cli::main_with_args(std::env::args_os()));
}
