fn main() {
    std::process::exit(pvsim_cli::run());
}
