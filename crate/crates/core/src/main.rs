fn main() {
    std::process::exit(qbfs::cli::run(std::env::args_os()));
}
