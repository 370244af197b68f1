fn main() {
    std::process::exit(asyncsa::harness::dispatch(std::env::args_os()));
}
