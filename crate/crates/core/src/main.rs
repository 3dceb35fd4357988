fn main() {
    std::process::exit(luders::cli::run(std::env::args_os()));
}
