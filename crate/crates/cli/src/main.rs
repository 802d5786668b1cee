use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use multitime_cli::{run_file, RunOptions};

/// Runs one multitime scenario from a TOML config.
#[derive(Parser, Debug)]
#[command(name = "multitime", version)]
struct Args {
    /// Scenario config file.
    #[arg(long)]
    config: PathBuf,

    /// Output directory, overriding `output_dir` in the config.
    #[arg(long)]
    output: Option<PathBuf>,

    /// Progress notes on stderr.
    #[arg(long)]
    verbose: bool,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(2);
        }
    };
    let opts = RunOptions { config_path: None, output_override: args.output, verbose: args.verbose };
    match run_file(&args.config, &opts) {
        Ok(report) => {
            println!("{}", serde_json::to_string(&report.summary).unwrap_or_default());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
