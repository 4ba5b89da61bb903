fn main() {
    std::process::exit(dualchain::cli::main_with_args(std::env::args_os()));
}
