fn main() {
    std::process::exit(tubal::cli::run(std::env::args_os()));
}
