fn main() {
    std::process::exit(coherence_cs::cli::run(std::env::args_os()));
}
