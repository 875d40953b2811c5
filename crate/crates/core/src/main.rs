fn main() {
    std::process::exit(coin_sim::cli::main());
}
