fn main() {
    std::process::exit(riccati_rk_cli::main_with_args(std::env::args_os()));
}
