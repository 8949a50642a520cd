fn main() {
    std::process::exit(microdoppler::cli::main());
}
