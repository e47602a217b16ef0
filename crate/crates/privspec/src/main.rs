fn main() {
    std::process::exit(privspec::cli::main());
}
