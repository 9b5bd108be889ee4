use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use pmimg::config::{parse_config, ExperimentConfig};
use pmimg::io::{read_data, write_data, DataFile};
use pmimg::pipeline;

/// Forward simulation and sampling-method imaging of biperiodic media.
#[derive(Parser)]
#[command(name = "pmimg", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for every source and write `data.txt` and `forward.json`.
    Forward(Common),
    /// Add noise to a data file and write `data_noisy.txt`.
    Noise(WithData),
    /// Evaluate the configured indicators and write volumes and `summary.json`.
    Image(WithData),
    /// Evaluate both indicators and write normalised volumes and `compare.json`.
    Compare(WithData),
}

#[derive(Args)]
struct Common {
    /// TOML configuration; defaults to the benchmark protocol.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output.directory`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Noise seed; overrides `noise.seed`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct WithData {
    #[command(flatten)]
    common: Common,
    /// Rayleigh data file.
    #[arg(long)]
    data: PathBuf,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let text = match &self.config {
            Some(path) => std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?,
            None => String::new(),
        };
        let mut config = parse_config(&text).context("invalid configuration")?;
        if let Some(seed) = self.seed {
            config.noise.seed = seed;
        }
        if let Some(out) = &self.out {
            config.output.directory = out.clone();
        }
        Ok(config)
    }
}

fn load_data(path: &Path) -> Result<DataFile> {
    read_data(path).with_context(|| format!("reading {}", path.display()))
}

fn report(paths: &[PathBuf]) {
    for p in paths {
        println!("{}", p.display());
    }
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Forward(common) => {
            let config = common.load()?;
            let run = pipeline::run_forward(&config)?;
            log::info!("largest solver residual {:.3e}", run.summary().max_residual);
            report(&pipeline::write_forward(&run, &config.output.directory)?);
        }
        Command::Noise(args) => {
            let config = args.common.load()?;
            let data = load_data(&args.data)?;
            let noisy = pipeline::run_noise(&config, &data.matrix, None)?;
            let dir = &config.output.directory;
            std::fs::create_dir_all(dir)?;
            let path = dir.join("data_noisy.txt");
            write_data(&path, &noisy, data.config_hash.as_deref())?;
            report(&[path]);
        }
        Command::Image(args) => {
            let config = args.common.load()?;
            let data = load_data(&args.data)?;
            let fields = pipeline::run_image(&config, &data.matrix)?;
            report(&pipeline::write_image(
                &fields,
                &config,
                &config.output.directory,
            )?);
        }
        Command::Compare(args) => {
            let config = args.common.load()?;
            let data = load_data(&args.data)?;
            let cmp = pipeline::run_compare(&config, &data.matrix)?;
            log::info!(
                "mask overlap with the scatterer: new {:.3}, baseline {:.3}",
                cmp.report.new.jaccard,
                cmp.report.osm.jaccard
            );
            report(&pipeline::write_compare(
                &cmp,
                &config,
                &config.output.directory,
            )?);
        }
    }
    Ok(())
}
