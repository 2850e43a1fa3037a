fn main() {
    std::process::exit(heckesign_cli::run(std::env::args_os()));
}
