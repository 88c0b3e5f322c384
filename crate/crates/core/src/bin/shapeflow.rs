use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use shapeflow::cli::{run_cli, Command};

/// Minimizing-movement flows of shapes and capacitary measures.
#[derive(Parser)]
#[command(name = "shapeflow", version)]
struct Args {
    /// One of measure-flow, shape-flow, ball-benchmark, annulus-case,
    /// square-case, remark32-case, distance.
    #[arg(value_parser = clap::builder::PossibleValuesParser::new(Command::NAMES))]
    command: String,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Seed for randomized probes (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Ok(v) = std::env::var("SHAPEFLOW_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    eprintln!("warning: could not size the thread pool: {e}");
                }
            }
            _ => {
                eprintln!("error: SHAPEFLOW_THREADS must be a positive integer, got {v:?}");
                return ExitCode::from(2);
            }
        }
    }
    let code = run_cli(&args.command, &args.config, &args.out, args.seed);
    ExitCode::from(code as u8)
}
