mod audit;
mod commands;
mod config;
mod inputs;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use clinbias::embed_io::StoreFormat;
use clinbias::table::Format;

use crate::config::{ConfigError, ConfigFile};

/// Gender bias audits for clinical word embeddings.
#[derive(Parser, Debug)]
#[command(name = "clinbias", version)]
struct Cli {
    /// Settings file of `key = value` lines. Flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Score the lexicon, classify against prevalence and write all reports.
    Audit(AuditArgs),
    /// Derive the gender direction and print it with its diagnostics.
    GenderDirection(DirectionArgs),
    /// Per-category Direct Bias summary.
    DirectBias(DirectBiasArgs),
    /// Gendered probability mass of mask-fill results.
    MaskReport(MaskArgs),
    /// Descriptive statistics over a cohort CSV.
    Demographics(DemographicsArgs),
    /// Convert a vector store between word2vec text and binary.
    Convert(ConvertArgs),
    /// Write the template sentences for every lexicon term as NDJSON.
    RenderTemplates(RenderArgs),
}

#[derive(Args, Debug, Clone, Default)]
pub struct StoreArgs {
    /// Vector store file. Repeat to merge several contextual files.
    #[arg(long, value_name = "PATH")]
    pub store: Vec<PathBuf>,
    /// Store format; inferred from the extension when omitted.
    #[arg(long, value_name = "w2v-text|w2v-bin|ndjson")]
    pub store_format: Option<StoreFormat>,
    /// Definitional pairs CSV (`female,male`). Defaults to the built-in set.
    #[arg(long, value_name = "PATH")]
    pub pairs: Option<PathBuf>,
    /// Seed for the power-iteration start vector.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct OutputArgs {
    /// Output file (stdout when omitted).
    #[arg(long, visible_alias = "output", value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, value_name = "csv|md")]
    pub format: Option<Format>,
}

#[derive(Args, Debug, Clone)]
pub struct AuditArgs {
    #[command(flatten)]
    pub store: StoreArgs,
    /// Lexicon CSV (`term,category,subgroup`). Defaults to the built-in lexicon.
    #[arg(long, value_name = "PATH")]
    pub lexicon: Option<PathBuf>,
    /// Template file, checked for contextual stores.
    #[arg(long, value_name = "PATH")]
    pub templates: Option<PathBuf>,
    /// Prevalence CSV. Defaults to the built-in table.
    #[arg(long, value_name = "PATH")]
    pub prevalence: Option<PathBuf>,
    /// Minimum |score| for a verdict.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Output directory.
    #[arg(long, visible_alias = "output", value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct DirectionArgs {
    #[command(flatten)]
    pub store: StoreArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug, Clone)]
pub struct DirectBiasArgs {
    #[command(flatten)]
    pub store: StoreArgs,
    #[arg(long, value_name = "PATH")]
    pub lexicon: Option<PathBuf>,
    /// Also write per-term records here.
    #[arg(long, value_name = "PATH")]
    pub records: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug, Clone)]
pub struct MaskArgs {
    /// Mask-fill NDJSON.
    #[arg(long, value_name = "PATH")]
    pub input: PathBuf,
    /// Comma-separated female tokens (replaces the default set).
    #[arg(long, value_delimiter = ',')]
    pub female_tokens: Option<Vec<String>>,
    /// Comma-separated male tokens (replaces the default set).
    #[arg(long, value_delimiter = ',')]
    pub male_tokens: Option<Vec<String>>,
    /// Entries considered per sentence.
    #[arg(long, default_value_t = clinbias::maskprob::DEFAULT_K)]
    pub k: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug, Clone)]
pub struct DemographicsArgs {
    /// Cohort CSV.
    #[arg(long, value_name = "PATH")]
    pub input: PathBuf,
    /// Column that identifies a row (patient or admission id).
    #[arg(long, value_name = "COLUMN")]
    pub key: String,
    /// Categorical column to summarize. Repeatable.
    #[arg(long = "column", value_name = "COLUMN")]
    pub columns: Vec<String>,
    /// Cross-tabulation as `ROW_COLUMN,COL_COLUMN`. Repeatable.
    #[arg(long, value_name = "ROW,COL")]
    pub crosstab: Vec<String>,
    /// Column holding ICD-9 codes.
    #[arg(long, value_name = "COLUMN")]
    pub code_column: Option<String>,
    /// Admission column for per-admission chapter counts (defaults to the key).
    #[arg(long, value_name = "COLUMN")]
    pub admission_column: Option<String>,
    /// Chapter map CSV (`start,end,label`). Defaults to the built-in map.
    #[arg(long, value_name = "PATH")]
    pub chapter_map: Option<PathBuf>,
    /// Admission and discharge timestamp columns, as `ADMIT,DISCHARGE`.
    #[arg(long, value_name = "ADMIT,DISCHARGE")]
    pub stay: Option<String>,
    /// Comma-separated values treated as missing.
    #[arg(long, value_delimiter = ',')]
    pub missing: Option<Vec<String>>,
    /// Decimal places for displayed percentages.
    #[arg(long, default_value_t = 1)]
    pub decimals: u32,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug, Clone)]
pub struct ConvertArgs {
    #[arg(long, value_name = "PATH")]
    pub input: PathBuf,
    #[arg(long, value_name = "w2v-text|w2v-bin")]
    pub from: Option<StoreFormat>,
    #[arg(long, visible_alias = "out", value_name = "PATH")]
    pub output: PathBuf,
    #[arg(long, value_name = "w2v-text|w2v-bin")]
    pub to: StoreFormat,
}

#[derive(Args, Debug, Clone)]
pub struct RenderArgs {
    #[arg(long, value_name = "PATH")]
    pub lexicon: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub templates: Option<PathBuf>,
    #[arg(long, visible_alias = "output", value_name = "PATH")]
    pub out: Option<PathBuf>,
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let cfg = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    match cli.command {
        Command::Audit(a) => audit::run(&a, &cfg),
        Command::GenderDirection(a) => commands::gender_direction_cmd(&a, &cfg),
        Command::DirectBias(a) => commands::direct_bias(&a, &cfg),
        Command::MaskReport(a) => commands::mask_report(&a, &cfg),
        Command::Demographics(a) => commands::demographics(&a, &cfg),
        Command::Convert(a) => commands::convert(&a),
        Command::RenderTemplates(a) => commands::render_templates_cmd(&a, &cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.chain().any(|c| c.is::<ConfigError>()) {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
