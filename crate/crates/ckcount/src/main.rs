fn main() {
    std::process::exit(ckcount::cli::run(std::env::args_os()));
}
