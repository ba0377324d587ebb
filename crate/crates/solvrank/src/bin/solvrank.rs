fn main() {
    std::process::exit(solvrank::cli::run());
}
