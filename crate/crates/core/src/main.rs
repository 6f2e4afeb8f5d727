fn main() {
    std::process::exit(vsc_lab::cli::run(std::env::args_os()));
}
