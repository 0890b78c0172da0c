fn main() {
    std::process::exit(stargraph::cli::main_with_args(std::env::args_os()));
}
