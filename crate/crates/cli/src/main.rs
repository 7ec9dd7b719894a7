fn main() {
    std::process::exit(bellmem_cli::run(std::env::args_os()));
}
