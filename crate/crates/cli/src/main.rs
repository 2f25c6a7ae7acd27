fn main() {
    std::process::exit(bvqc_cli::run(std::env::args_os()));
}
