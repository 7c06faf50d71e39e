fn main() {
    std::process::exit(avmac_core::cli::run(std::env::args_os()));
}
