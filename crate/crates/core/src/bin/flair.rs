fn main() {
    std::process::exit(flair::cli::main_with_args(std::env::args_os()));
}
