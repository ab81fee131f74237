fn main() {
    std::process::exit(rss_entropy::cli::run(std::env::args_os()));
}
