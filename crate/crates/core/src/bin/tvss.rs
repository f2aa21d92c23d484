fn main() {
    std::process::exit(tvss::cli::run(std::env::args_os()));
}
