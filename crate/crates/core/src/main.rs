use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rotframe::cli::{exit_code, load_config, run};

#[derive(Parser)]
#[command(name = "rotframe", version, about = "Gauge-fixed rotating frames for N-body quantum systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the single experiment named in the config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; defaults to `output.path` or the current directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        verbose: bool,
    },
    /// Parse and check a config without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn init_threads() {
    if let Some(n) = std::env::var("ROTFRAME_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_threads();
    let result = match cli.command {
        Command::Validate { config } => load_config(&config).map(|c| {
            println!("ok: {}", c.experiment().map(|k| k.name()).unwrap_or("?"));
            0
        }),
        Command::Run { config, out, seed, verbose } => load_config(&config).and_then(|c| {
            let dir = out.or_else(|| c.output.path.clone().map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("."));
            let r = run(&c, &dir, seed)?;
            for a in &r.outcome.assertions {
                if verbose || !a.passed {
                    println!("{} {}: {}", if a.passed { "PASS" } else { "FAIL" }, a.name, a.detail);
                }
            }
            if verbose {
                for p in &r.artifacts {
                    eprintln!("wrote {}", p.display());
                }
            }
            Ok(if r.passed() { 0 } else { 1 })
        }),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
