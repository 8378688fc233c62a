fn main() {
    std::process::exit(ringlab::cli::run(std::env::args_os()));
}
