fn main() {
    std::process::exit(passage::cli::main_with(std::env::args_os()));
}
