fn main() {
    std::process::exit(mmblock_core::cli::run(std::env::args_os()));
}
