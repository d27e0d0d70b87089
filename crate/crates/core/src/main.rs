fn main() {
    std::process::exit(semicircle::cli::parse_and_dispatch(std::env::args_os()));
}
