fn main() {
    std::process::exit(polariton_lab::cli::main_entry());
}
