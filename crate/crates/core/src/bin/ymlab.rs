fn main() {
    std::process::exit(ym_blowup::cli::run(std::env::args_os()));
}
