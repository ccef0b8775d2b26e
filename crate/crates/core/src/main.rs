fn main() {
    std::process::exit(logistic_discount::cli::run(std::env::args_os()));
}
