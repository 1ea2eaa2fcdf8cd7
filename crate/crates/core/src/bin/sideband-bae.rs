fn main() {
    std::process::exit(sideband_bae::cli::main_with_args(std::env::args_os()));
}
