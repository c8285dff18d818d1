fn main() {
    std::process::exit(bragg::cli::main());
}
