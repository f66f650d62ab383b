fn main() {
    std::process::exit(cavspin::io::main_with_args(std::env::args_os()));
}
