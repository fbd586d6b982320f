fn main() {
    std::process::exit(spinphase::cli::run(std::env::args_os()));
}
