fn main() {
    std::process::exit(toastlab::cli::run(std::env::args_os()));
}
