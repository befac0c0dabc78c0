fn main() {
    std::process::exit(truncated_hitting::cli::dispatch(std::env::args_os()));
}
