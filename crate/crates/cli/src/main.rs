fn main() {
    std::process::exit(masscad_cli::run(std::env::args_os()));
}
