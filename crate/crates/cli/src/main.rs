fn main() {
    std::process::exit(thermogeo_cli::run(std::env::args_os()));
}
