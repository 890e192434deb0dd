fn main() {
    std::process::exit(alsp::cli::run(std::env::args_os()));
}
