fn main() {
    std::process::exit(pcfso::cli::main_entry());
}
