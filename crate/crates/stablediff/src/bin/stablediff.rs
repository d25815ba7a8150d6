fn main() {
    std::process::exit(stablediff::cli::main_with_args(std::env::args_os()));
}
