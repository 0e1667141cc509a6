fn main() {
    std::process::exit(gqe::cli::run(std::env::args_os()));
}
