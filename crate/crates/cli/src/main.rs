fn main() {
    std::process::exit(styloprof_cli::run(std::env::args_os()));
}
