fn main() {
    std::process::exit(possic::cli::main_with_args(std::env::args_os()));
}
