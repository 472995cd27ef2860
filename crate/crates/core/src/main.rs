fn main() {
    std::process::exit(bearing_eval::cli::run());
}
