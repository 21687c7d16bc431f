use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use islandgp::harness::{
    compare_runs, read_csv, run_experiment, write_aggregates, App, ConfigFile, ExperimentConfig,
    HarnessError, Landscape, TransportKind,
};
use islandgp::island::MigrationMode;

#[derive(Parser)]
#[command(name = "islandgp", version, about = "Island-model genetic programming experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write per-generation statistics as CSV.
    Run(RunArgs),
    /// Compare generations-to-threshold of two CSV datasets.
    Compare {
        baseline: PathBuf,
        treatment: PathBuf,
        #[arg(long, default_value_t = 0.9)]
        threshold: f64,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    app: Option<App>,
    #[arg(long)]
    islands: Option<usize>,
    #[arg(long)]
    capacity: Option<usize>,
    #[arg(long)]
    generations: Option<u64>,
    #[arg(long)]
    iterations: Option<usize>,
    /// Generations between migration events.
    #[arg(long)]
    interval: Option<u64>,
    /// Fraction of capacity sent per event.
    #[arg(long)]
    rate: Option<f64>,
    /// migrate, random or none.
    #[arg(long)]
    mode: Option<MigrationMode>,
    /// homo or hetero.
    #[arg(long)]
    landscape: Option<Landscape>,
    #[arg(long)]
    seed: Option<u64>,
    /// sim or udp.
    #[arg(long)]
    transport: Option<TransportKind>,
    /// Probability that a migrant is lost in transit.
    #[arg(long)]
    loss: Option<f64>,
    /// Generation-time helper for localisation (on/off).
    #[arg(long, value_parser = parse_switch)]
    helper: Option<bool>,
    #[arg(long)]
    max_depth: Option<usize>,
    #[arg(long)]
    threads: Option<usize>,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Optional CSV of per-generation mean/sd/se.
    #[arg(long)]
    summary: Option<PathBuf>,
}

fn parse_switch(s: &str) -> Result<bool, String> {
    match s {
        "on" | "true" | "yes" => Ok(true),
        "off" | "false" | "no" => Ok(false),
        _ => Err(format!("expected on or off, got `{s}`")),
    }
}

impl RunArgs {
    fn config(&self) -> Result<ExperimentConfig, HarnessError> {
        let mut cfg = ExperimentConfig::default();
        if let Some(path) = &self.config {
            ConfigFile::load(path)?.apply(&mut cfg)?;
        }
        let overlay = ConfigFile {
            app: self.app,
            islands: self.islands,
            capacity: self.capacity,
            generations: self.generations,
            iterations: self.iterations,
            interval: self.interval,
            rate: self.rate,
            mode: self.mode,
            landscape: self.landscape,
            seed: self.seed,
            transport: self.transport,
            loss: self.loss,
            helper: self.helper,
            max_depth: self.max_depth,
            threads: self.threads,
            ..ConfigFile::default()
        };
        overlay.apply(&mut cfg)?;
        Ok(cfg)
    }
}

fn run(args: RunArgs) -> Result<(), HarnessError> {
    let cfg = args.config()?;
    let dataset = run_experiment(&cfg)?;
    let csv = dataset.to_csv()?;
    match &args.out {
        Some(path) => std::fs::write(path, csv)?,
        None => io::stdout().lock().write_all(&csv)?,
    }
    if let Some(path) = &args.summary {
        write_aggregates(&dataset.aggregates(), BufWriter::new(File::create(path)?))?;
    }
    Ok(())
}

fn compare(baseline: PathBuf, treatment: PathBuf, threshold: f64) -> Result<(), HarnessError> {
    let load = |p: &PathBuf| -> Result<_, HarnessError> { read_csv(BufReader::new(File::open(p)?)) };
    let c = compare_runs(&load(&baseline)?, &load(&treatment)?, threshold)?;
    let show = |g: Option<u64>| g.map_or("not reached".to_string(), |g| g.to_string());
    println!("threshold\t{}", c.threshold);
    println!("baseline\t{}", show(c.baseline));
    println!("treatment\t{}", show(c.treatment));
    match c.improvement {
        Some(r) => println!("improvement\t{r:.4}"),
        None => println!("improvement\tn/a"),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let result = match Cli::parse().command {
        Command::Run(args) => run(args),
        Command::Compare {
            baseline,
            treatment,
            threshold,
        } => compare(baseline, treatment, threshold),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
