fn main() {
    std::process::exit(rcw_cli::run(std::env::args_os()));
}
