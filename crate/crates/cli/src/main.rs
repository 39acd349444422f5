fn main() {
    std::process::exit(virlab_cli::run(std::env::args_os()));
}
