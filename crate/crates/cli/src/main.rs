fn main() {
    std::process::exit(vpe_cli::run(std::env::args_os()));
}
