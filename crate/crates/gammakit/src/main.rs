fn main() {
    std::process::exit(gammakit::cli::main_with_args(std::env::args_os()));
}
