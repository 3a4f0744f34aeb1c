fn main() {
    std::process::exit(chapter_eval::cli::run(std::env::args_os()));
}
