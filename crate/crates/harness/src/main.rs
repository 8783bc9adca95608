fn main() {
    std::process::exit(shadowlab_harness::cli::run(std::env::args_os()));
}
