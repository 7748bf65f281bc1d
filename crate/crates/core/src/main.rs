fn main() {
    std::process::exit(tdnn_enhance::cli::main_with_args(std::env::args_os()));
}
