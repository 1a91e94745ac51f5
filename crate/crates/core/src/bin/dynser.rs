fn main() {
    std::process::exit(dynser::cli::run(std::env::args_os()));
}
