fn main() {
    let args: Vec<String> = std::env::args().collect();
    std::process::exit(kgau_core::sandbox::worker::worker_main(&args[1..]));
}
