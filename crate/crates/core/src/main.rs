fn main() {
    std::process::exit(eprenorm::cli::run())
}
