fn main() {
    std::process::exit(cascade_harness::cli::main_with_args(std::env::args_os()));
}
