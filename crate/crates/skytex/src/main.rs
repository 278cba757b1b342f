fn main() {
    std::process::exit(skytex::cli::main_with_args(std::env::args_os()));
}
