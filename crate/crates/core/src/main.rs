fn main() {
    std::process::exit(angular_uncertainty::cli::main_with_args(std::env::args_os()));
}
