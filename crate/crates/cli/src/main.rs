fn main() {
    std::process::exit(graphonlab_cli::run(std::env::args_os()));
}
