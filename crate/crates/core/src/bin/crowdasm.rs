fn main() {
    std::process::exit(crowdasm::cli::main_with_args(std::env::args_os()));
}
