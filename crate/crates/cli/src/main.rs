fn main() {
    std::process::exit(lisafit_cli::run(std::env::args_os()));
}
