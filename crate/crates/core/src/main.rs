fn main() {
    std::process::exit(fashsim::cli::main_with_args(std::env::args_os()));
}
