fn main() {
    std::process::exit(convex_peano::cli::main_with_args(std::env::args_os()));
}
