//! `geoeval` command-line driver.

mod commands;
mod config;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, CommandFactory, Parser, Subcommand};
use geoeval::corpus::BratConfig;
use geoeval::metrics::{MatchMode, DEFAULT_THRESHOLD_KM};
use geoeval::tagger::DEFAULT_MAX_NGRAM;

#[derive(Debug, Parser)]
#[command(name = "geoeval", version, about = "Geoparsing evaluation: geotagging and geocoding metrics, baselines and significance tests")]
pub struct Cli {
    /// TOML file of default flag values: top-level keys apply to every
    /// subcommand that accepts them, `[subcommand]` tables to one subcommand.
    /// Flags given on the command line win.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// More log output on stderr (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    /// Worker threads for document processing (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,

    /// Print only the machine-readable result on stdout.
    #[arg(short, long, global = true)]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the gazetteer index from a Geonames dump and cache it.
    Ingest(IngestArgs),
    /// Score geotagging (precision, recall, F-score).
    EvalTagging(EvalTaggingArgs),
    /// Score geocoding (accuracy@km, AUC, mean and median error).
    EvalGeocoding(EvalGeocodingArgs),
    /// Run the gazetteer baseline: Oracle or dictionary NER plus population resolution.
    Baseline(BaselineArgs),
    /// Snap predicted coordinates to the nearest same-name gazetteer entry.
    Align(AlignArgs),
    /// Split the corpus into article-level cross-validation folds.
    Folds(FoldsArgs),
    /// Generate augmented training sentences from expression annotations.
    Augment(AugmentArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Geonames main-table dump (tab separated, 19 columns).
    #[arg(long, value_name = "PATH")]
    pub dump: PathBuf,
    /// Output cache file.
    #[arg(long, value_name = "PATH")]
    pub cache: PathBuf,
    /// Keep only these feature classes, e.g. "A,P" (default: all).
    #[arg(long, value_name = "CSV")]
    pub feature_classes: Option<String>,
    /// Rebuild even when the cache matches the dump.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct GoldArgs {
    /// Directory of BRAT `.txt`/`.ann` pairs.
    #[arg(long, value_name = "DIR")]
    pub gold: PathBuf,
    /// Dataset identifier for reports (default: the gold directory name).
    #[arg(long, value_name = "ID")]
    pub dataset_id: Option<String>,
    /// Attribute holding a modifier's form (Adjective or Noun).
    #[arg(long, default_value = "modifier_type", value_name = "NAME")]
    pub modifier_attribute: String,
    /// Attribute flagging non-locational toponyms or expressions.
    #[arg(long, default_value = "non_locational", value_name = "NAME")]
    pub non_locational_attribute: String,
    /// Attribute giving an expression's role (Context or Head).
    #[arg(long, default_value = "role", value_name = "NAME")]
    pub role_attribute: String,
    /// Normalisation database name carrying gazetteer ids.
    #[arg(long, default_value = "Geonames", value_name = "NAME")]
    pub gazetteer_db: String,
    /// Normalisation database name carrying "lat,lon" coordinates.
    #[arg(long, default_value = "Coordinates", value_name = "NAME")]
    pub coordinate_db: String,
}

impl GoldArgs {
    pub fn brat_config(&self) -> BratConfig {
        BratConfig {
            modifier_attribute: self.modifier_attribute.clone(),
            non_locational_attribute: self.non_locational_attribute.clone(),
            role_attribute: self.role_attribute.clone(),
            gazetteer_db: self.gazetteer_db.clone(),
            coordinate_db: self.coordinate_db.clone(),
        }
    }
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Write the JSON report here.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Write the CSV rows here.
    #[arg(long, value_name = "PATH")]
    pub csv: Option<PathBuf>,
    /// System name for the first prediction file (default: its file stem).
    #[arg(long, value_name = "NAME")]
    pub system: Option<String>,
    /// System name for the second prediction file (default: its file stem).
    #[arg(long, value_name = "NAME")]
    pub system_b: Option<String>,
}

#[derive(Debug, Args)]
pub struct EvalTaggingArgs {
    #[command(flatten)]
    pub gold: GoldArgs,
    /// Prediction file (JSON lines).
    #[arg(long, value_name = "PATH")]
    pub pred: PathBuf,
    /// Second system's predictions; adds McNemar's test.
    #[arg(long, value_name = "PATH")]
    pub pred_b: Option<PathBuf>,
    #[arg(long, default_value_t = MatchMode::Exact, value_name = "exact|overlap")]
    pub mode: MatchMode,
    /// Score only gold toponyms kept by the exclusion policy (needs --cache).
    #[arg(long, requires = "cache")]
    pub exclude: bool,
    /// Gazetteer cache, for --exclude and the reported gazetteer version.
    #[arg(long, value_name = "PATH")]
    pub cache: Option<PathBuf>,
    /// McNemar without continuity correction.
    #[arg(long)]
    pub no_continuity_correction: bool,
    #[command(flatten)]
    pub report: ReportArgs,
}

#[derive(Debug, Args)]
pub struct EvalGeocodingArgs {
    #[command(flatten)]
    pub gold: GoldArgs,
    /// Prediction file (JSON lines) with coordinates.
    #[arg(long, value_name = "PATH")]
    pub pred: PathBuf,
    /// Second system's predictions; adds the Wilcoxon signed-rank test.
    #[arg(long, value_name = "PATH")]
    pub pred_b: Option<PathBuf>,
    /// Gazetteer cache used for the exclusion policy and gold coordinates.
    #[arg(long, value_name = "PATH")]
    pub cache: PathBuf,
    /// Accuracy thresholds in km, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = vec![DEFAULT_THRESHOLD_KM], value_name = "KM")]
    pub thresholds: Vec<f64>,
    #[arg(long, default_value_t = MatchMode::Exact, value_name = "exact|overlap")]
    pub mode: MatchMode,
    /// Wilcoxon variance without the tie correction.
    #[arg(long)]
    pub no_tie_correction: bool,
    #[command(flatten)]
    pub report: ReportArgs,
}

#[derive(Debug, Args)]
pub struct ResolverArgs {
    /// Two-column TSV mapping surface forms (e.g. demonyms) to gazetteer names.
    #[arg(long, value_name = "PATH")]
    pub lexicon: Option<PathBuf>,
    /// Only consider populated places (feature class P).
    #[arg(long)]
    pub populated_only: bool,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("ner").required(true).args(["oracle_ner", "dictionary_ner"])))]
pub struct BaselineArgs {
    #[command(flatten)]
    pub gold: GoldArgs,
    #[arg(long, value_name = "PATH")]
    pub cache: PathBuf,
    /// Take spans from the gold toponyms kept by the exclusion policy.
    #[arg(long)]
    pub oracle_ner: bool,
    /// Tag spans by longest gazetteer match.
    #[arg(long)]
    pub dictionary_ner: bool,
    #[command(flatten)]
    pub resolver: ResolverArgs,
    /// Word list replacing the built-in blocklist for dictionary tagging.
    #[arg(long, value_name = "PATH", conflicts_with = "no_blocklist")]
    pub blocklist: Option<PathBuf>,
    /// Dictionary tagging without any blocklist.
    #[arg(long)]
    pub no_blocklist: bool,
    /// Longest n-gram tried by dictionary tagging.
    #[arg(long, default_value_t = DEFAULT_MAX_NGRAM, value_name = "N")]
    pub max_ngram: usize,
    /// Output prediction file.
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AlignArgs {
    #[arg(long, value_name = "PATH")]
    pub pred: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub cache: PathBuf,
    #[command(flatten)]
    pub resolver: ResolverArgs,
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FoldsArgs {
    #[command(flatten)]
    pub gold: GoldArgs,
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    #[arg(long)]
    pub seed: u64,
    /// Output fold plan (JSON).
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    #[command(flatten)]
    pub gold: GoldArgs,
    #[arg(long, value_name = "N")]
    pub max_per_source: usize,
    #[arg(long)]
    pub seed: u64,
    /// Output token/tag file.
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    let raw: Vec<OsString> = std::env::args_os().collect();
    let args = match config::expand_args(raw, &Cli::command()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };

    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("could not size the thread pool: {e}");
        }
    }

    match std::panic::catch_unwind(|| commands::run(&cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(failure)) => {
            eprintln!("error: {:#}", failure.error());
            ExitCode::from(failure.exit_code())
        }
        Err(_) => ExitCode::from(2),
    }
}
