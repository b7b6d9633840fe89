fn main() {
    std::process::exit(halfspace_cli::main_with(std::env::args_os()));
}
