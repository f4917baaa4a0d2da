fn main() {
    std::process::exit(umtp_cli::run(std::env::args_os()));
}
