fn main() {
    std::process::exit(tracespace::cli::main());
}
