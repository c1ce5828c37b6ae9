fn main() {
    std::process::exit(spinbus::cli::run(std::env::args_os()));
}
