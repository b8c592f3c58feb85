use clap::Parser;
use fracwave_cli::config::Experiment;
use fracwave_cli::{execute, Overrides};
use std::path::PathBuf;
use std::process::ExitCode;

/// Runs one fracwave experiment from a JSON config.
#[derive(Debug, Parser)]
#[command(name = "fracwave", version)]
struct Args {
    experiment: Experiment,
    #[arg(long)]
    config: PathBuf,
    /// Overrides `output_dir` from the config.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Overrides `seed` from the config.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, env = "FRACWAVE_THREADS")]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("fracwave: cannot size thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    let overrides = Overrides { output_dir: args.output_dir, seed: args.seed };
    match execute(args.experiment, &args.config, &overrides) {
        Ok(m) => {
            for v in &m.verdicts {
                println!("{} {}: {}", if v.pass { "PASS" } else { "FAIL" }, v.check, v.detail);
            }
            if m.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("fracwave: {e}");
            ExitCode::from(2)
        }
    }
}
