fn main() {
    std::process::exit(spectral_flow::cli::run(std::env::args_os()));
}
