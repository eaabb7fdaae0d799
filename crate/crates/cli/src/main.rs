fn main() {
    std::process::exit(cocycle_bundle::cli::main_with(std::env::args_os()));
}
