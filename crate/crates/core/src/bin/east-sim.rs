fn main() {
    std::process::exit(east_core::cli::main_with_args(std::env::args_os()));
}
