fn main() {
    std::process::exit(sctool::cli_main(std::env::args_os()));
}
