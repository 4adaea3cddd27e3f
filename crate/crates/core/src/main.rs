fn main() {
    std::process::exit(fgsos::cli::run(std::env::args_os()));
}
