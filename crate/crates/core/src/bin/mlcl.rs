fn main() {
    std::process::exit(mlcl::cli::dispatch(std::env::args_os()));
}
