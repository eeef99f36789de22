fn main() {
    std::process::exit(excsim::cli::main_with_args(std::env::args_os()));
}
