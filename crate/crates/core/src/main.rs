fn main() {
    std::process::exit(featdp::cli::run(std::env::args_os()));
}
