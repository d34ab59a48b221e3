fn main() {
    std::process::exit(jetinv::cli::run(std::env::args_os()));
}
