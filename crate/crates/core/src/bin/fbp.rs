fn main() {
    std::process::exit(fbp::cli::run_from(std::env::args_os()));
}
