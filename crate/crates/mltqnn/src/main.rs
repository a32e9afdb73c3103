fn main() {
    std::process::exit(mltqnn::cli::run(std::env::args_os()));
}
