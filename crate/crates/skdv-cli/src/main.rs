fn main() {
    let env = skdv_cli::config_env();
    std::process::exit(skdv_cli::run_cli(std::env::args_os(), &env));
}
