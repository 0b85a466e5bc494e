fn main() {
    std::process::exit(volfeedback::cli::run(std::env::args_os()));
}
