fn main() {
    std::process::exit(robust_sparse::cli::run(std::env::args_os()));
}
