fn main() {
    std::process::exit(aro::cli::main_with_args(std::env::args_os()));
}
