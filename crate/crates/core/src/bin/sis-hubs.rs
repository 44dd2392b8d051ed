fn main() {
    std::process::exit(sis_hubs::cli::run(std::env::args_os()));
}
