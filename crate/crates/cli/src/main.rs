fn main() {
    std::process::exit(nng_lab::run(std::env::args_os()));
}
