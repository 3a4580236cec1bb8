fn main() {
    std::process::exit(aggsolve::cli::main_with_args(std::env::args_os()));
}
