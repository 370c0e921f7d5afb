fn main() {
    std::process::exit(spinmetro_cli::run_cli(std::env::args_os()));
}
