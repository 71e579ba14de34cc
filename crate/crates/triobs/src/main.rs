fn main() {
    std::process::exit(triobs::cli::main_impl(std::env::args_os()));
}
