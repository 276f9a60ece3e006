use clap::{Args, Parser, Subcommand};
use fracfuse::pipeline::Variant;
use fracfuse_cli::{parse_scales, run, Command, ParamOverrides, RunConfig, EXIT_INVALID};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "fracfuse", version, about = "Multi-scale fractional-order de-hazing and image statistics")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// De-haze images, writing <stem>_pa.<ext> into the output directory.
    Dehaze(Common),
    /// Write per-channel moments and HSV statistics to stats.csv.
    Stats(Common),
    /// Write a 256-bin histogram per image to <stem>_hist.csv.
    Hist(Common),
    /// Time the pipeline (best of --reps, single thread) and write bench.csv.
    Bench(Common),
}

#[derive(Args)]
struct Common {
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long, value_parser = parse_variant)]
    variant: Option<Variant>,
    #[arg(long)]
    k: Option<f64>,
    #[arg(long)]
    nu: Option<f64>,
    /// Comma-separated bilateral scales, e.g. 1,2,4
    #[arg(long, value_parser = parse_scale_list)]
    scales: Option<ScaleList>,
    /// Skip the tonal correction stage.
    #[arg(long)]
    no_gocs: bool,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    jobs: Option<u64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    reps: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// key = value file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.parse().map_err(|e: fracfuse::Error| e.to_string())
}

#[derive(Clone)]
struct ScaleList(Vec<f64>);

fn parse_scale_list(s: &str) -> Result<ScaleList, String> {
    parse_scales(s).map(ScaleList)
}

fn build(cli: Cli) -> Result<RunConfig, String> {
    let (command, c) = match cli.command {
        Sub::Dehaze(c) => (Command::Dehaze, c),
        Sub::Stats(c) => (Command::Stats, c),
        Sub::Hist(c) => (Command::Hist, c),
        Sub::Bench(c) => (Command::Bench, c),
    };
    let flags = ParamOverrides {
        variant: c.variant,
        k: c.k,
        nu: c.nu,
        scales: c.scales.map(|l| l.0),
        gocs: c.no_gocs.then_some(false),
        jobs: c.jobs.map(|n| n as usize),
        reps: c.reps.map(|n| n as usize),
        out: c.out,
    };
    let file = match &c.config {
        Some(path) => ParamOverrides::load_config(path).map_err(|e| e.to_string())?,
        None => ParamOverrides::default(),
    };
    RunConfig::new(command, c.inputs, flags.over(file)).map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let config = match build(Cli::parse()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INVALID as u8);
        }
    };
    let summary = run(&config, &mut std::io::stdout().lock());
    ExitCode::from(summary.exit_code() as u8)
}
