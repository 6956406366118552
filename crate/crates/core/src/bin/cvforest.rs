fn main() {
    std::process::exit(cvforest::cli::main());
}
