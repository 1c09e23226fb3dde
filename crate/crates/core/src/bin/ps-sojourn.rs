fn main() {
    std::process::exit(ps_sojourn::cli::main_with_args(std::env::args_os()));
}
