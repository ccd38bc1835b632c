use std::process::exit;

fn main() {
    exit(svip::cli::run(std::env::args_os()));
}
