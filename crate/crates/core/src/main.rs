fn main() {
    std::process::exit(thermogp::cli::main());
}
