use clap::{Parser, Subcommand, ValueEnum};
use edgeflow_cli::config::{Experiment, RunConfig};
use edgeflow_cli::pipeline::run_pipeline;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Bulk band structure along Γ–X–M–Γ.
    Bands,
    /// Degeneracy, effective parameters and the local gap at δ.
    BulkGap,
    /// Chern numbers of H^{+,δ} and H^{−,δ}.
    Chern,
    /// Eigenvalue curves of an effective edge family.
    EffSpec,
    /// Strip edge state diagram.
    EdgeDiagram,
    /// Strip eigenvalues against effective predictions at δ and δ/2.
    Compare,
    /// Full acceptance suite.
    Validate,
}

impl Command {
    fn experiment(&self) -> Experiment {
        match self {
            Command::Bands => Experiment::Bands,
            Command::BulkGap => Experiment::BulkGap,
            Command::Chern => Experiment::Chern,
            Command::EffSpec => Experiment::EffSpec,
            Command::EdgeDiagram => Experiment::EdgeDiagram,
            Command::Compare => Experiment::Compare,
            Command::Validate => Experiment::Validate,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "edgeflow", version, about = "Edge states of deformed square-lattice media")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration; defaults apply when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides output.dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for k and κ sweeps.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output formats (overrides output.formats); repeat or separate with commas.
    #[arg(long, global = true, value_enum, value_delimiter = ',')]
    format: Vec<Format>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cfg, text) = match &cli.config {
        Some(p) => match RunConfig::load(p) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("config error: {e}");
                return ExitCode::from(2);
            }
        },
        None => (RunConfig::default(), String::new()),
    };
    let experiment = cli.command.experiment();
    if let Some(e) = cfg.experiment {
        if e != experiment {
            eprintln!("config error: experiment: file names '{}' but the subcommand is '{}'", e.name(), experiment.name());
            return ExitCode::from(2);
        }
    }
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("runtime error: {e}");
            return ExitCode::from(1);
        }
    }
    let formats: Vec<String> = if cli.format.is_empty() {
        cfg.output.formats.clone()
    } else {
        cli.format.iter().map(|f| format!("{f:?}").to_lowercase()).collect()
    };
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
    match run_pipeline(experiment, &cfg, &text, &out, &formats) {
        Ok(s) => {
            for f in &s.record.manifest.files {
                println!("{}  {}", f.sha256, out.join(&f.name).display());
            }
            if s.passed {
                ExitCode::SUCCESS
            } else {
                eprintln!("acceptance failed");
                ExitCode::from(3)
            }
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
