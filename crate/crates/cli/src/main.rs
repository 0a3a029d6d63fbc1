fn main() {
    std::process::exit(timealloc_cli::run(std::env::args_os()));
}
