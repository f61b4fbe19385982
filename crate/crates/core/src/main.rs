fn main() {
    std::process::exit(srr::cli::run(std::env::args_os()));
}
