fn main() {
    std::process::exit(hollowtree::cli::main_entry());
}
