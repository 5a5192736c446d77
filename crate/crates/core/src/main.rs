fn main() {
    std::process::exit(wbfmap::cli::main_with_args(std::env::args_os()));
}
