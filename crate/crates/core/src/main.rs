fn main() {
    std::process::exit(codedcache::cli::run(std::env::args().collect()));
}
