fn main() {
    spc_relay::cli::init_logging();
    std::process::exit(spc_relay::cli::main_with_args(std::env::args_os()));
}
