fn main() {
    std::process::exit(koenigs_lab::cli::main_with_args(std::env::args_os()));
}
