fn main() {
    std::process::exit(arisim::run(std::env::args_os()));
}
