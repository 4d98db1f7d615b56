fn main() {
    std::process::exit(qss_cli::main_with(std::env::args_os()));
}
