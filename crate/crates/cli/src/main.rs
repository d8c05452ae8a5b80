use std::io::Write;

use clap::Parser;
use localmax_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    if let Err(e) = run(&cli, &mut out) {
        let _ = out.flush();
        eprintln!("error: {e}");
        std::process::exit(e.code as i32);
    }
}
