fn main() {
    std::process::exit(workloop::cli::main_with_args(std::env::args_os()));
}
