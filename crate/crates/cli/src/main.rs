fn main() {
    std::process::exit(hodiff_cli::run_cli(std::env::args_os()));
}
