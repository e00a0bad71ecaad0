fn main() {
    std::process::exit(unfair_urn_cli::main_with_args(std::env::args_os()));
}
