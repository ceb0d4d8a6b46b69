fn main() {
    std::process::exit(proofmatch::cli::run(std::env::args_os()));
}
