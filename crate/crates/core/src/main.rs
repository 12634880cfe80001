fn main() {
    std::process::exit(neutral_dichotomy::cli::run(std::env::args_os()));
}
