fn main() {
    std::process::exit(effect_histories::cli::run(std::env::args_os()));
}
