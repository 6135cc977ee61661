use clap::{Parser, Subcommand};
use magnon_experiments::{execute, ConfigFile, Error, ExperimentId, Overrides, Severity};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "magnon", version, about = "Run the magnon-sensing experiments and write CSV bundles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment.
    Run {
        experiment: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Use the shot counts of the original measurements instead of the desk-scale default.
        #[arg(long)]
        paper_scale: bool,
        /// Output root; files go to OUT/<experiment>/.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the registered experiments.
    List,
    /// Check a configuration for every experiment, or for one.
    Validate {
        experiment: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        paper_scale: bool,
    },
}

fn load(config: Option<&PathBuf>) -> Result<ConfigFile, Error> {
    match config {
        Some(path) => ConfigFile::read(path),
        None => Ok(ConfigFile::defaults()),
    }
}

fn fail(e: Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::List => {
            for id in ExperimentId::ALL {
                println!("{:<30} {}", id.name(), id.description());
            }
            ExitCode::SUCCESS
        }
        Command::Validate {
            experiment,
            config,
            paper_scale,
        } => {
            let file = match load(config.as_ref()) {
                Ok(f) => f,
                Err(e) => return fail(e),
            };
            let ids = match experiment.as_deref().map(ExperimentId::parse).transpose() {
                Ok(Some(id)) => vec![id],
                Ok(None) => ExperimentId::ALL.to_vec(),
                Err(e) => return fail(e),
            };
            let ov = Overrides {
                paper_scale,
                ..Overrides::default()
            };
            let mut errors = 0;
            for id in ids {
                for d in file.diagnostics(id, &ov) {
                    if d.severity == Severity::Error {
                        errors += 1;
                    }
                    println!("{id}: {d}");
                }
            }
            if errors > 0 {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            }
        }
        Command::Run {
            experiment,
            config,
            seed,
            paper_scale,
            out,
        } => {
            let id = match ExperimentId::parse(&experiment) {
                Ok(id) => id,
                Err(e) => return fail(e),
            };
            let ov = Overrides { seed, out, paper_scale };
            let cfg = match load(config.as_ref()).and_then(|f| {
                for d in f.diagnostics(id, &ov).iter().filter(|d| d.severity == Severity::Warning) {
                    eprintln!("{d}");
                }
                f.resolve(id, &ov)
            }) {
                Ok(cfg) => cfg,
                Err(e) => return fail(e),
            };
            match execute(&cfg) {
                Ok((_, manifest)) => {
                    let dir = cfg.bundle_dir();
                    for f in &manifest.files {
                        println!("{}", dir.join(&f.name).display());
                    }
                    println!("{}", dir.join(magnon_experiments::output::MANIFEST_NAME).display());
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
    }
}
