fn main() {
    std::process::exit(sdmm::cli::main_with_env());
}
