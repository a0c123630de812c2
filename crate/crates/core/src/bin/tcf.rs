fn main() {
    std::process::exit(tcf_core::cli::run(std::env::args_os()));
}
