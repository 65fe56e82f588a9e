fn main() {
    std::process::exit(blowup_lab::expcli::cli::run(std::env::args_os()));
}
