fn main() {
    std::process::exit(stackdist::cli::main_with_args(std::env::args_os()));
}
