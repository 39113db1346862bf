fn main() {
    std::process::exit(sympcap_cli::run(std::env::args_os()));
}
