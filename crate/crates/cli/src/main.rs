fn main() {
    std::process::exit(perclab_cli::run(std::env::args_os()));
}
