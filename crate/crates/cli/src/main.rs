fn main() {
    std::process::exit(normlab_cli::run(std::env::args_os()));
}
