use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use dgrod::assembly::Method;
use dgrod::study::{run_convergence_study, write_outputs, MeshSource, OutputFormat, RunConfig, StudyError};

/// Mesh-refinement convergence studies for the DG and DG–ROD methods.
#[derive(Debug, Parser)]
#[command(name = "dgrod", version)]
struct Args {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output root; results go to <out>/<name>/.
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv, md or both
    #[arg(long)]
    format: Option<OutputFormat>,
    /// classical, rod_global or rod_iterative
    #[arg(long)]
    method: Option<Method>,
    /// Comma-separated ring counts for the built-in mesh generator.
    #[arg(long, value_delimiter = ',')]
    levels: Option<Vec<usize>>,
    /// Polynomial degree N.
    #[arg(long)]
    degree: Option<usize>,
}

fn load(args: &Args) -> Result<RunConfig, StudyError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| StudyError::Config(format!("{}: {e}", args.config.display())))?;
    let mut cfg: RunConfig = toml::from_str(&text).map_err(|e| StudyError::Config(e.to_string()))?;
    if let Some(out) = &args.out {
        cfg.out_dir = out.clone();
    }
    if let Some(f) = args.format {
        cfg.format = f;
    }
    if let Some(m) = args.method {
        cfg.method = m;
    }
    if let Some(levels) = &args.levels {
        cfg.mesh = MeshSource::Builtin { levels: levels.clone() };
    }
    if let Some(n) = args.degree {
        cfg.degree = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(args: &Args) -> Result<(), StudyError> {
    let cfg = load(args)?;
    let report = run_convergence_study(&cfg)?;
    let dir = write_outputs(&cfg, &report)?;
    print!("{}", report.to_markdown());
    println!("\nwrote {}", dir.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
