fn main() {
    std::process::exit(mmzd::cli::main());
}
