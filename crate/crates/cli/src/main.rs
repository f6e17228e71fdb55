//! `bodymap`: generate, render, analyze and export synthetic body-map
//! documentations.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use bodymap_core::Location;
use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};

use crate::config::{BackendFlags, GlobalFlags};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "bodymap", version, about = "Synthetic canine body-map documentations", propagate_version = true)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Run configuration file (TOML, or JSON with a .json extension).
    #[arg(long, global = true, env = "BODYMAP_CONFIG", value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Region atlas [default: data/atlas.json of the installation].
    #[arg(long, global = true, env = "BODYMAP_ATLAS", value_name = "FILE")]
    pub atlas: Option<PathBuf>,
    /// Breed knowledge base [default: data/kb.json].
    #[arg(long, global = true, env = "BODYMAP_KB", value_name = "FILE")]
    pub kb: Option<PathBuf>,
    /// Prompt template directory [default: prompts/].
    #[arg(long, global = true, env = "BODYMAP_PROMPTS", value_name = "DIR")]
    pub prompts: Option<PathBuf>,
    /// Worker threads: 1 runs sequentially, 0 uses all cores [default: 0].
    #[arg(long, global = true, env = "BODYMAP_PARALLEL", value_name = "N")]
    pub parallel: Option<usize>,
    /// Print what would be done without writing anything.
    #[arg(long, global = true)]
    pub dry_run: bool,
    /// More log output (-v info, -vv debug). RUST_LOG takes precedence.
    #[arg(short, long, global = true, action = ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate documentations with the three-step LLM pipeline.
    Generate(GenerateArgs),
    /// Draw rule-based documentations.
    Baseline(BaselineArgs),
    /// Render the documentations of a manifest as sketch-style SVG (and PNG).
    Render(RenderArgs),
    /// Per-region frequencies, bubble charts and group summaries.
    Analyze(AnalyzeArgs),
    /// Split manifests and write the classifier image layout.
    Export(ExportArgs),
    /// Check the atlas, knowledge base, prompts and optional manifests.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SeedArg {
    /// Master seed; every random choice derives from it.
    #[arg(long, env = "BODYMAP_SEED")]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Diagnosis the documentations should show.
    #[arg(long, default_value = "patellar luxation", conflicts_with = "diagnosis_pool")]
    pub diagnosis: String,
    /// Luxation grade.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4), conflicts_with = "diagnosis_pool")]
    pub grade: Option<u8>,
    /// Affected side of the luxation.
    #[arg(long, value_parser = parse_location, conflicts_with = "diagnosis_pool")]
    pub location: Option<Location>,
    /// File with one diagnosis per line; each item picks one.
    #[arg(long, value_name = "FILE")]
    pub diagnosis_pool: Option<PathBuf>,
    /// How items pick from the diagnosis pool.
    #[arg(long, value_enum, default_value_t = PlanArg::Uniform, requires = "diagnosis_pool")]
    pub plan: PlanArg,
    /// Number of documentations.
    #[arg(long)]
    pub count: usize,
    #[command(flatten)]
    pub seed: SeedArg,
    /// Output directory (manifest.jsonl, rejects.jsonl).
    #[arg(long)]
    pub out: PathBuf,
    /// Answer from a scripted mock fixture instead of an HTTP backend.
    #[arg(long, value_name = "FIXTURE")]
    pub mock: Option<PathBuf>,
    /// Id prefix; ids are <prefix><index:06>.
    #[arg(long, default_value = "llm-")]
    pub id_prefix: String,
    /// Do not ask the model to wrap its reasoning in think tags.
    #[arg(long)]
    pub no_reasoning: bool,
    #[command(flatten)]
    pub backend: BackendArgs,
}

#[derive(Debug, Clone, Args)]
pub struct BackendArgs {
    /// OpenAI-compatible endpoint, e.g. http://localhost:8000/v1.
    #[arg(long)]
    pub backend_url: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub temperature: Option<f64>,
    #[arg(long)]
    pub top_p: Option<f64>,
    /// Per-request timeout in seconds.
    #[arg(long)]
    pub timeout: Option<u64>,
    /// Repair rounds after a reply violates its constraint.
    #[arg(long)]
    pub max_retries: Option<u32>,
    /// Concurrent requests in flight.
    #[arg(long)]
    pub max_in_flight: Option<usize>,
}

impl BackendArgs {
    fn flags(&self) -> BackendFlags {
        BackendFlags {
            base_url: self.backend_url.clone(),
            model: self.model.clone(),
            temperature: self.temperature,
            top_p: self.top_p,
            timeout_secs: self.timeout,
            max_retries: self.max_retries,
            max_in_flight: self.max_in_flight,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlanArg {
    Uniform,
    RoundRobin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClassArg {
    Patellar,
    Other,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    #[arg(long, value_enum)]
    pub class: ClassArg,
    #[arg(long)]
    pub count: usize,
    #[command(flatten)]
    pub seed: SeedArg,
    /// Output directory (manifest.jsonl).
    #[arg(long)]
    pub out: PathBuf,
    /// Id prefix [default: rb-patellar- or rb-other-].
    #[arg(long)]
    pub id_prefix: Option<String>,
    /// Leave patient metadata empty.
    #[arg(long)]
    pub no_metadata: bool,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub seed: SeedArg,
    /// Also rasterize each SVG to PNG.
    #[arg(long)]
    pub png: bool,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Manifest to analyze; repeat to pool several.
    #[arg(long, required = true)]
    pub manifest: Vec<PathBuf>,
    /// Grouping: grade, location, age, sex, weight or none.
    #[arg(long, default_value = "none")]
    pub by: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// Manifest to export; repeat to pool several.
    #[arg(long, required = true)]
    pub manifest: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Share of each label that goes to training.
    #[arg(long, default_value_t = 0.8)]
    pub train_frac: f64,
    #[command(flatten)]
    pub seed: SeedArg,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Manifests whose documentations should be checked against the atlas.
    #[arg(long)]
    pub manifest: Vec<PathBuf>,
    /// Mock fixture to parse.
    #[arg(long, value_name = "FIXTURE")]
    pub mock: Option<PathBuf>,
}

fn parse_location(s: &str) -> Result<Location, String> {
    s.parse()
}

impl Global {
    fn flags(&self) -> GlobalFlags {
        GlobalFlags {
            config: self.config.clone(),
            atlas: self.atlas.clone(),
            kb: self.kb.clone(),
            prompts: self.prompts.clone(),
            parallel: self.parallel,
            dry_run: self.dry_run,
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
}

/// Collapses a clap error into a single line.
fn usage_error(err: &clap::Error) -> CliError {
    let rendered = err.render().to_string();
    let text: Vec<&str> = rendered
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with("Usage:") && !l.starts_with("For more information"))
        .collect();
    CliError::usage(text.join(" ").trim_start_matches("error:").trim())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let err = usage_error(&e);
            eprintln!("{err}");
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    init_logging(cli.global.verbose);
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
