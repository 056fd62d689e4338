fn main() {
    std::process::exit(covbound::cli::main_with_args(std::env::args_os()));
}
