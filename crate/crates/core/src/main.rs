fn main() {
    std::process::exit(procpat::cli::run(std::env::args_os()));
}
