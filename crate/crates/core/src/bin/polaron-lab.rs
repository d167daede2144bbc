fn main() {
    std::process::exit(polaron_lab::cli::main_with_args(std::env::args_os()));
}
