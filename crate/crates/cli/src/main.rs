fn main() {
    std::process::exit(lunmeb_cli::run(std::env::args_os()));
}
