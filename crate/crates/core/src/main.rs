fn main() {
    let args: Vec<String> = std::env::args().collect();
    std::process::exit(spinbounce::cli::run_cli(&args));
}
