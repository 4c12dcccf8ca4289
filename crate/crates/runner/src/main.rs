fn main() {
    std::process::exit(critfpp_runner::cli::main_exit());
}
