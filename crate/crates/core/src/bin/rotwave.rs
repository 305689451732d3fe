fn main() {
    std::process::exit(rotwave::cli::run(std::env::args_os()));
}
