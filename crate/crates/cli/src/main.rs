fn main() {
    std::process::exit(randmean_cli::run(std::env::args_os()));
}
