fn main() {
    std::process::exit(modlab_cli::main_with(std::env::args_os()));
}
