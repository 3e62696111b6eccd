fn main() {
    std::process::exit(qcomp_cli::run(std::env::args_os()));
}
