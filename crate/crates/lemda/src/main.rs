fn main() {
    std::process::exit(lemda::cli::run(std::env::args_os()));
}
