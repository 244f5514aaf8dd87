fn main() {
    std::process::exit(btm_disagg_cli::run(std::env::args_os()));
}
