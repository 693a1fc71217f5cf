fn main() {
    std::process::exit(pubdyn::cli::run(std::env::args_os()));
}
