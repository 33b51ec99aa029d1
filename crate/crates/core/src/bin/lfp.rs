fn main() {
    std::process::exit(lfp::cli::run(std::env::args_os()));
}
