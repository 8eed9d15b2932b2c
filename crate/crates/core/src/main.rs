fn main() {
    std::process::exit(rabbitt_core::cli::main_with_args(std::env::args_os()));
}
