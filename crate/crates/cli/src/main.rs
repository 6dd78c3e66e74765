fn main() {
    std::process::exit(lambda4wm_cli::run_cli(std::env::args_os()));
}
