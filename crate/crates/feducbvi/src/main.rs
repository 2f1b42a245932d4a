fn main() {
    std::process::exit(feducbvi::cli::main_with(std::env::args_os()));
}
