fn main() {
    std::process::exit(oxyrecon::cli::main_with_args(std::env::args_os()));
}
