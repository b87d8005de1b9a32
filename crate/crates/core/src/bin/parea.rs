fn main() {
    std::process::exit(parea::cli::run(std::env::args_os()));
}
