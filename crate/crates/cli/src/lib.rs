//! Command-line driver: one subcommand per pipeline stage.

pub mod config;
pub mod manifest;
pub mod stages;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context as _, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use config::PipelineConfig;
use stages::{AnalysisKind, Context, MissingArtifacts};

#[derive(Debug, Parser)]
#[command(
    name = "swkg",
    version,
    about = "Software mention extraction and knowledge graph pipeline"
)]
pub struct Cli {
    /// `key = value` configuration file; relative paths resolve against its directory.
    #[arg(short, long, global = true)]
    pub config: Option<PathBuf>,
    /// Artifact directory (overrides SWKG_OUTPUT_DIR and the config file).
    #[arg(short, long, global = true)]
    pub output_dir: Option<PathBuf>,
    /// Worker threads for parallel stages.
    #[arg(short, long, global = true)]
    pub jobs: Option<usize>,
    /// Overrides a config key; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse the corpus into documents.jsonl.
    Ingest,
    /// Apply labeling functions and emit the silver corpus.
    Weaklabel {
        /// Also write false-positive n-grams on the gold training corpus here.
        #[arg(long)]
        error_report: Option<PathBuf>,
    },
    /// Train the tagger (silver pretraining, then gold fine-tuning).
    Train(TrainFlags),
    /// Tag every methods section with the trained model.
    Tag,
    /// Score the model on the gold test corpus in all four match modes.
    Evaluate,
    /// Cluster mention strings and link them to the KB.
    Disambiguate,
    /// Build graph.nt and graph.jsonld.
    BuildKg,
    /// Run a query against a graph.
    Query(QueryArgs),
    /// Run a canned analysis.
    Analyze(AnalyzeArgs),
    /// Run all stages in order.
    Pipeline(TrainFlags),
}

#[derive(Debug, Clone, Default, Args)]
pub struct TrainFlags {
    /// Train on the gold corpus only, without a silver corpus.
    #[arg(long)]
    pub no_ssc: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub ssc_learning_rate: Option<f64>,
    /// `linear:<rate>` or `exponential:<rate>`.
    #[arg(long)]
    pub ssc_lr_decay: Option<String>,
    #[arg(long)]
    pub ssc_feature_dropout: Option<f64>,
    #[arg(long)]
    pub ssc_positive_class_weight_boost: Option<f64>,
    #[arg(long)]
    pub ssc_epochs: Option<usize>,
    #[arg(long)]
    pub ssc_negative_sampling_ratio: Option<f64>,
    #[arg(long)]
    pub gsc_learning_rate: Option<f64>,
    #[arg(long)]
    pub gsc_lr_decay: Option<String>,
    #[arg(long)]
    pub gsc_feature_dropout: Option<f64>,
    #[arg(long)]
    pub gsc_positive_class_weight_boost: Option<f64>,
    /// 0 keeps the silver-pretrained model unchanged.
    #[arg(long)]
    pub gsc_epochs: Option<usize>,
    #[arg(long)]
    pub gsc_negative_sampling_ratio: Option<f64>,
}

impl TrainFlags {
    fn apply(&self, cfg: &mut PipelineConfig) -> Result<()> {
        let opt = |v: Option<String>, key: &str| v.map(|v| (key.to_string(), v));
        let pairs = [
            opt(self.seed.map(|v| v.to_string()), "seed"),
            opt(
                self.ssc_learning_rate.map(|v| v.to_string()),
                "ssc.learning_rate",
            ),
            opt(self.ssc_lr_decay.clone(), "ssc.lr_decay"),
            opt(
                self.ssc_feature_dropout.map(|v| v.to_string()),
                "ssc.feature_dropout",
            ),
            opt(
                self.ssc_positive_class_weight_boost.map(|v| v.to_string()),
                "ssc.positive_class_weight_boost",
            ),
            opt(self.ssc_epochs.map(|v| v.to_string()), "ssc.epochs"),
            opt(
                self.ssc_negative_sampling_ratio.map(|v| v.to_string()),
                "ssc.negative_sampling_ratio",
            ),
            opt(
                self.gsc_learning_rate.map(|v| v.to_string()),
                "gsc.learning_rate",
            ),
            opt(self.gsc_lr_decay.clone(), "gsc.lr_decay"),
            opt(
                self.gsc_feature_dropout.map(|v| v.to_string()),
                "gsc.feature_dropout",
            ),
            opt(
                self.gsc_positive_class_weight_boost.map(|v| v.to_string()),
                "gsc.positive_class_weight_boost",
            ),
            opt(self.gsc_epochs.map(|v| v.to_string()), "gsc.epochs"),
            opt(
                self.gsc_negative_sampling_ratio.map(|v| v.to_string()),
                "gsc.negative_sampling_ratio",
            ),
        ];
        for (k, v) in pairs.into_iter().flatten() {
            cfg.set(&k, &v)?;
        }
        Ok(())
    }
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    /// Query file.
    #[arg(long, conflicts_with = "text", required_unless_present = "text")]
    pub file: Option<PathBuf>,
    /// Query text.
    #[arg(long)]
    pub text: Option<String>,
    /// N-Triples graph; defaults to graph.nt in the output directory.
    pub graph: Option<PathBuf>,
    /// Write the result table as CSV instead of printing it.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AnalysisArg {
    MentionsPerYear,
    Availability,
    Successor,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    pub kind: AnalysisArg,
    /// N-Triples graph; defaults to graph.nt in the output directory.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Keep only the k most mentioned software (mentions-per-year).
    #[arg(long)]
    pub top_k: Option<usize>,
}

impl Command {
    pub fn stage_name(&self) -> &'static str {
        match self {
            Command::Ingest => "ingest",
            Command::Weaklabel { .. } => "weaklabel",
            Command::Train(_) => "train",
            Command::Tag => "tag",
            Command::Evaluate => "evaluate",
            Command::Disambiguate => "disambiguate",
            Command::BuildKg => "build-kg",
            Command::Query(_) => "query",
            Command::Analyze(_) => "analyze",
            Command::Pipeline(_) => "pipeline",
        }
    }
}

fn configure(cli: &Cli) -> Result<Context> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::empty(),
    };
    for kv in &cli.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| anyhow!("--set expects KEY=VALUE, got `{kv}`"))?;
        cfg.set(k.trim(), v.trim())?;
    }
    match &cli.command {
        Command::Train(f) | Command::Pipeline(f) => f.apply(&mut cfg)?,
        Command::Analyze(a) => {
            if let Some(k) = a.top_k {
                cfg.set("top_k", &k.to_string())?;
            }
        }
        _ => {}
    }
    if let Some(j) = cli.jobs {
        cfg.set("jobs", &j.to_string())?;
    }
    if let Some(j) = cfg.jobs()? {
        // the global pool can only be configured once per process
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global();
    }
    let out = cfg.output_dir(cli.output_dir.as_deref());
    Ok(Context::new(cfg, out))
}

/// Runs one parsed invocation, printing results to stdout.
pub fn run(cli: Cli) -> Result<()> {
    let ctx = configure(&cli)?;
    match &cli.command {
        Command::Ingest => ctx.ingest(),
        Command::Weaklabel { error_report } => ctx.weaklabel(error_report.as_deref()),
        Command::Train(f) => ctx.train(!f.no_ssc),
        Command::Tag => ctx.tag(),
        Command::Evaluate => ctx.evaluate().map(|t| print!("{t}")),
        Command::Disambiguate => ctx.disambiguate(),
        Command::BuildKg => ctx.build_kg(),
        Command::Query(q) => {
            let text = match (&q.file, &q.text) {
                (Some(f), _) => std::fs::read_to_string(f)
                    .with_context(|| format!("reading {}", f.display()))?,
                (None, Some(t)) => t.clone(),
                (None, None) => unreachable!("clap requires one of --file/--text"),
            };
            ctx.query(&text, q.graph.as_deref(), q.csv.as_deref())
                .map(|t| print!("{t}"))
        }
        Command::Analyze(a) => {
            let kind = match a.kind {
                AnalysisArg::MentionsPerYear => AnalysisKind::MentionsPerYear,
                AnalysisArg::Availability => AnalysisKind::Availability,
                AnalysisArg::Successor => AnalysisKind::Successor,
            };
            ctx.analyze(kind, a.graph.as_deref(), a.csv.as_deref())
                .map(|t| print!("{t}"))
        }
        Command::Pipeline(f) => ctx.pipeline(!f.no_ssc).map(|t| {
            if let Some(t) = t {
                print!("{t}");
            }
        }),
    }
}

/// Parses arguments and runs; errors are reported on stderr with the stage name.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let stage = cli.command.stage_name();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if e.downcast_ref::<MissingArtifacts>().is_some() {
                eprintln!("swkg: {e:#}");
            } else {
                eprintln!("swkg: stage `{stage}` failed: {e:#}");
            }
            ExitCode::FAILURE
        }
    }
}
