fn main() {
    std::process::exit(avglab::cli::main_with_args(std::env::args_os()));
}
