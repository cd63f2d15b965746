fn main() {
    std::process::exit(dualchart::cli::main_with_args(std::env::args_os()));
}
