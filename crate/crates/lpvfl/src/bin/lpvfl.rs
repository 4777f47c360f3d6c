fn main() {
    std::process::exit(lpvfl::cli::run(std::env::args_os()));
}
