fn main() {
    std::process::exit(relrank::cli::run_cli());
}
