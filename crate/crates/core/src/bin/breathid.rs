fn main() {
    std::process::exit(breathauth::cli::main_with_args(std::env::args().collect()));
}
