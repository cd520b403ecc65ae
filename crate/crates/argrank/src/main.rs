fn main() {
    std::process::exit(argrank::cli::run(std::env::args_os()));
}
