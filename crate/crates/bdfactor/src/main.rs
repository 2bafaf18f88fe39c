fn main() {
    std::process::exit(bdfactor::cli::main_entry());
}
