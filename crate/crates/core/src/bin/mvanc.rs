fn main() {
    std::process::exit(mvanc_core::harness::cli_main(std::env::args_os()));
}
