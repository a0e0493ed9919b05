fn main() {
    std::process::exit(cusumseg::cli::run(std::env::args_os()));
}
