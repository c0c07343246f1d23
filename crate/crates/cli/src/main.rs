//! `pitchmdp`: batch pipeline and API server.
//!
//! All commands share one output directory:
//!
//! ```text
//! <out>/events.json            ingest: neutral JSON archive
//! <out>/ingest_stats.json
//! <out>/team_names.json
//! <out>/models/<team>.json     build
//! <out>/build_report.json
//! <out>/heatmaps/<team>/<analysis>.{csv,json,svg}
//! <out>/whatif/<mode>.{csv,json}
//! <out>/validation.{csv,json}
//! ```

mod commands;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pitchmdp::events::InputFormat;
use pitchmdp::{Analysis, SweepMode, ZoneId};

#[derive(Debug, Parser)]
#[command(
    name = "pitchmdp",
    version,
    about = "Shot-or-move analysis with per-team Markov models"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Restrict to these team ids (repeatable).
    #[arg(long = "team", global = true)]
    pub teams: Vec<String>,
    /// Output directory shared by all commands.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Output formats (repeatable or comma separated).
    #[arg(long = "format", global = true, value_delimiter = ',')]
    pub formats: Vec<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl Format {
    pub fn ext(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Svg => "svg",
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse raw event data into the neutral archive.
    Ingest(IngestArgs),
    /// Fit and validate one model per team.
    Build,
    /// Scenario heatmaps per team.
    Analyze(AnalyzeArgs),
    /// Season what-if sweeps, or a single adjustment with --zones/--x.
    Whatif(WhatifArgs),
    /// Model diagnostics against the archived possessions.
    Validate,
    /// HTTP/JSON API over built models.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Input file or directory; overrides `input.path`.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// neutral_csv, neutral_json or statsbomb; overrides `input.format`.
    #[arg(long = "input-format")]
    pub input_format: Option<InputFormat>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Analyses to run (default: k=1, k=2, flank_first, better_shot).
    #[arg(long = "analysis", value_delimiter = ',')]
    pub analyses: Vec<String>,
    /// Moves for a bare `shoot_vs_move`.
    #[arg(long)]
    pub k: Option<usize>,
}

#[derive(Debug, Args)]
pub struct WhatifArgs {
    /// Sweep modes (default: uniform and targeted).
    #[arg(long = "mode", value_delimiter = ',')]
    pub modes: Vec<SweepMode>,
    /// Relative shooting changes; overrides `whatif.sweep`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub sweep: Vec<f64>,
    /// Explicit zones for a single adjustment.
    #[arg(long, value_delimiter = ',', requires = "x")]
    pub zones: Vec<usize>,
    /// Adjustment for --zones.
    #[arg(long, allow_hyphen_values = true)]
    pub x: Option<f64>,
    /// Skip the shot-quality adjustment.
    #[arg(long)]
    pub no_quality_adjust: bool,
}

impl AnalyzeArgs {
    pub fn resolve(&self) -> Result<Vec<Analysis>, pitchmdp::analysis::AnalysisError> {
        if self.analyses.is_empty() {
            return Ok(Analysis::STANDARD.to_vec());
        }
        self.analyses.iter().map(|a| Analysis::parse(a, self.k)).collect()
    }
}

impl WhatifArgs {
    pub fn zone_ids(&self) -> Vec<ZoneId> {
        self.zones.iter().copied().map(ZoneId).collect()
    }
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub bind: SocketAddr,
    /// Model directory (default: <out>/models).
    #[arg(long)]
    pub models: Option<PathBuf>,
    /// Static files served for non-API paths.
    #[arg(long = "static")]
    pub static_dir: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = commands::Context::new(cli.global).and_then(|ctx| match cli.command {
        Command::Ingest(a) => ctx.ingest(&a),
        Command::Build => ctx.build(),
        Command::Analyze(a) => ctx.analyze(&a),
        Command::Whatif(a) => ctx.whatif(&a),
        Command::Validate => ctx.validate(),
        Command::Serve(a) => ctx.serve(&a),
    });
    match result {
        Ok(commands::Outcome::Clean) => ExitCode::SUCCESS,
        Ok(commands::Outcome::Failures(n)) => {
            log::error!("{n} failure(s)");
            ExitCode::FAILURE
        }
        Err(e) => {
            log::error!("{e:#}");
            ExitCode::from(2)
        }
    }
}
