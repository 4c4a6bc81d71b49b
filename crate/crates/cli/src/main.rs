fn main() {
    std::process::exit(larvactl::dispatch(std::env::args_os()));
}
