fn main() {
    std::process::exit(hghz::cli::run(std::env::args_os()));
}
