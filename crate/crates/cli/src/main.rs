fn main() {
    std::process::exit(readorder_cli::run(std::env::args_os()));
}
