fn main() {
    std::process::exit(memkernel_cli::run(std::env::args_os()));
}
