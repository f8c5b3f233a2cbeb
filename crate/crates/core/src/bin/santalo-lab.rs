use std::io::Write;

fn main() {
    let out = santalo_lab::cli::main_from_args(std::env::args_os());
    std::io::stdout().write_all(out.stdout.as_bytes()).expect("stdout");
    std::process::exit(out.code);
}
