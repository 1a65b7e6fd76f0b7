fn main() {
    std::process::exit(valigen_cli::dispatch(std::env::args_os()));
}
