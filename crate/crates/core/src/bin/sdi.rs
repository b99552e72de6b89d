fn main() {
    std::process::exit(sdi_core::cli::main_entry());
}
