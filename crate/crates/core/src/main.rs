fn main() {
    std::process::exit(otsu_bisect::cli::run(std::env::args_os()));
}
