fn main() {
    std::process::exit(ciphertrain::cli::run());
}
