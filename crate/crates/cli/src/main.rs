fn main() {
    std::process::exit(amdplab::cli::run(std::env::args_os()));
}
