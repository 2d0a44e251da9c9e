fn main() {
    std::process::exit(cascade_lab::cli::main_with_args(std::env::args_os()));
}
