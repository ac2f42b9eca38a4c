fn main() {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    std::process::exit(hdg_maxwell::cli::main_with_args(&argv));
}
