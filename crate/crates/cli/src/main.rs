fn main() {
    std::process::exit(birman_cli::execute(std::env::args_os()));
}
