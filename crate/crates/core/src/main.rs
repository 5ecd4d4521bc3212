fn main() {
    std::process::exit(sqflow::cli::main_exit_code());
}
