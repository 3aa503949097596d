fn main() {
    std::process::exit(adjflow::cli::run(std::env::args_os()));
}
