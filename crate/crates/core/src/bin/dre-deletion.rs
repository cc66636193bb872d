fn main() {
    std::process::exit(dre_deletion::cli::parse_and_dispatch(std::env::args_os()));
}
