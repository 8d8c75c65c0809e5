use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = ridgeline_cli::Cli::parse();
    match ridgeline_cli::run(&cli) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
