fn main() {
    std::process::exit(spectral_dpp::cli::run_command(std::env::args()));
}
