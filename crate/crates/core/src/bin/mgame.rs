fn main() {
    std::process::exit(mgame::cli::run_cli(std::env::args_os()));
}
