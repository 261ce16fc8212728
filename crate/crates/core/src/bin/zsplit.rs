fn main() {
    let code = zsplit::cli::run(std::env::args_os());
    std::process::exit(code as i32);
}
