fn main() {
    std::process::exit(qrng_entropy::cli::run(std::env::args_os()));
}
