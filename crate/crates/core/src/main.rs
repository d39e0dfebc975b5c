fn main() {
    std::process::exit(actpred::cli::run(std::env::args_os()));
}
