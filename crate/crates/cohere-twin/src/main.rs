fn main() {
    std::process::exit(cohere_twin::cli::run());
}
