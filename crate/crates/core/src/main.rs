fn main() {
    std::process::exit(nbibd::cli::run(std::env::args_os()));
}
