fn main() {
    std::process::exit(eb_core::cli::main_entry());
}
