fn main() {
    std::process::exit(canonpose::cli::run(std::env::args_os()));
}
