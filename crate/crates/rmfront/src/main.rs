fn main() {
    std::process::exit(rmfront::cli::run());
}
