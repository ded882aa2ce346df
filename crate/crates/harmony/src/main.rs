fn main() {
    std::process::exit(harmony::cli::run());
}
