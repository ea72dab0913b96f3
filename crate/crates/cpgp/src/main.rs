fn main() {
    std::process::exit(cpgp::cli::run(std::env::args_os()));
}
