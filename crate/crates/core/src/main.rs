fn main() {
    std::process::exit(proactive::cli::run(std::env::args_os()));
}
