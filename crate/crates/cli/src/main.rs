//! Command-line front end for the geolex pipeline: resolve profile
//! locations, train and apply location classifiers, run cross-validated
//! evaluations, produce corpus reports, and generate synthetic corpora.

use chrono::Duration;
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use geolex::analytics::{
    activity_stats, coverage, discriminative_hashtags, load_census, population_correlation,
    time_series,
};
use geolex::classify::{self, diverse_timeline, ClassifierSpec, LocationIndex, Variant};
use geolex::corpus::{filter_for_training, ingest, resolve_authors, GroupLevel, MicroPost};
use geolex::eval::{cross_validate, restrict_to, select_locations};
use geolex::gazetteer::{
    expand_templates, load_aliases, load_hierarchy, LocationHierarchy, NameIndex,
};
use geolex::synth::{generate, SynthConfig};
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::fmt;
use std::fs::File;
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};

/// Relative input paths are resolved against this directory when it is set.
const DATA_DIR_ENV: &str = "GEOLEX_DATA_DIR";
const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Parser)]
#[command(
    name = "geolex",
    version,
    about = "Lexical geolocation of micro-posts",
    after_help = format!(
        "Relative input paths are resolved against ${DATA_DIR_ENV} when set.\n\
         Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error."
    )
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Resolve profile location strings against the gazetteer
    Resolve(ResolveArgs),
    /// Train a location classifier and save it as a model file
    Train(TrainArgs),
    /// Rank locations for a text with a trained model
    Predict(PredictArgs),
    /// Stratified k-fold cross-validation of a classifier
    Evaluate(EvaluateArgs),
    /// Corpus-level reports
    #[command(subcommand)]
    Report(ReportCommand),
    /// Reorder posts into a geographically diverse feed
    Timeline(TimelineArgs),
    /// Generate a synthetic corpus with planted locations
    Synth(SynthArgs),
}

#[derive(Args)]
struct GazetteerArgs {
    /// Hierarchy CSV (id,name,level,parent_id)
    #[arg(long)]
    hierarchy: PathBuf,
    /// Optional alias CSV (surface,unit_id)
    #[arg(long)]
    aliases: Option<PathBuf>,
}

#[derive(Args)]
struct CorpusArgs {
    /// Post corpus, one JSON object per line
    #[arg(long)]
    posts: PathBuf,
    #[command(flatten)]
    gazetteer: GazetteerArgs,
}

#[derive(Args)]
struct OutputArgs {
    /// Output format
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write to a file instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ClassifierArgs {
    /// Classifier family
    #[arg(long, value_enum)]
    variant: VariantArg,
    /// Administrative level to classify at
    #[arg(long, value_enum)]
    level: LevelArg,
    /// Latent dimensions for lsi-u
    #[arg(long, default_value_t = 200)]
    k: usize,
    /// Fraction of distinct hashtags kept by tfidf-h
    #[arg(long, default_value_t = 0.01)]
    top_fraction: f64,
    /// Most frequent hashtags discarded by tfidf-h
    #[arg(long, default_value_t = 1)]
    skip_top: usize,
}

impl ClassifierArgs {
    fn spec(&self) -> ClassifierSpec {
        let variant = match self.variant {
            VariantArg::Baseline => Variant::Baseline,
            VariantArg::TfidfU => Variant::TfIdfU,
            VariantArg::TfidfL => Variant::TfIdfL,
            VariantArg::TfidfH => Variant::TfIdfH {
                top_fraction: self.top_fraction,
                skip_top: self.skip_top,
            },
            VariantArg::LsiU => Variant::LsiU { k: self.k },
        };
        ClassifierSpec {
            variant,
            level: self.level.into(),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Svg,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Baseline,
    TfidfU,
    TfidfL,
    TfidfH,
    LsiU,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LevelArg {
    Province,
    Region,
}

impl From<LevelArg> for GroupLevel {
    fn from(level: LevelArg) -> GroupLevel {
        match level {
            LevelArg::Province => GroupLevel::Province,
            LevelArg::Region => GroupLevel::Region,
        }
    }
}

#[derive(Args)]
struct ResolveArgs {
    #[command(flatten)]
    gazetteer: GazetteerArgs,
    /// Resolve one profile string
    #[arg(long, conflicts_with = "posts")]
    text: Option<String>,
    /// Resolve the profile of every post in a JSONL corpus
    #[arg(long)]
    posts: Option<PathBuf>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[command(flatten)]
    classifier: ClassifierArgs,
    /// Seed for every stochastic step
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Model file to write
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    /// Model file written by `train`
    #[arg(long)]
    model: PathBuf,
    /// Text to classify
    #[arg(long)]
    text: String,
    /// Fail unless the model was trained at this level
    #[arg(long, value_enum)]
    level: Option<LevelArg>,
    /// Keep only the best N locations
    #[arg(long)]
    top: Option<usize>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[command(flatten)]
    classifier: ClassifierArgs,
    /// Number of cross-validation folds
    #[arg(long, default_value_t = 10)]
    folds: usize,
    /// Seed for every stochastic step
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Maximum concurrent fold evaluations
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Subcommand)]
enum ReportCommand {
    /// Most location-specific hashtags per location
    Hashtags {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long, value_enum)]
        level: LevelArg,
        /// Hashtags reported per location
        #[arg(long, default_value_t = 3)]
        top_k: usize,
        /// Minimum distinct posts a hashtag must appear in
        #[arg(long, default_value_t = 5)]
        min_posts: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Census population versus observed accounts
    Population {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Census CSV (unit_id,population)
        #[arg(long)]
        census: PathBuf,
        #[arg(long, value_enum)]
        level: LevelArg,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Tweets-per-account distribution per location
    Activity {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long, value_enum)]
        level: LevelArg,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Tweet volume per location over fixed time bins
    Timeseries {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long, value_enum)]
        level: LevelArg,
        /// Bin width in minutes
        #[arg(long, default_value_t = 10)]
        bin_minutes: i64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// How much of the corpus resolved, and how precisely
    Coverage {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Args)]
struct TimelineArgs {
    /// Post corpus, one JSON object per line
    #[arg(long)]
    posts: PathBuf,
    /// Model file written by `train`
    #[arg(long)]
    model: PathBuf,
    /// Posts per location per round-robin cycle
    #[arg(long, default_value_t = 1)]
    quota: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SynthArgs {
    /// Number of locations (province/region pairs)
    #[arg(long, default_value_t = 5)]
    locations: usize,
    /// Zipf exponent of the location weights
    #[arg(long, default_value_t = 1.0)]
    zipf: f64,
    /// Mean users per location
    #[arg(long, default_value_t = 40)]
    users_per_location: usize,
    /// Mean posts per user (geometric distribution)
    #[arg(long, default_value_t = 3.0)]
    posts_per_user: f64,
    /// Shared vocabulary size
    #[arg(long, default_value_t = 400)]
    shared_vocab: usize,
    /// Local vocabulary size per location
    #[arg(long, default_value_t = 40)]
    local_vocab: usize,
    /// Probability a token is drawn from the local vocabulary
    #[arg(long, default_value_t = 0.3)]
    mixing: f64,
    /// Probability a token is rendered as a hashtag
    #[arg(long, default_value_t = 0.1)]
    hashtag_fraction: f64,
    /// Tokens per post
    #[arg(long, default_value_t = 8)]
    tokens_per_post: usize,
    /// Seed for every stochastic step
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Directory for posts.jsonl, hierarchy.csv, and census.csv
    #[arg(long)]
    out_dir: PathBuf,
}

// ---------------------------------------------------------------------------
// Errors and exit codes
// ---------------------------------------------------------------------------

#[derive(Debug)]
enum CliError {
    Usage(String),
    Data(String),
    Internal(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (kind, message) = match self {
            CliError::Usage(m) => ("usage", m),
            CliError::Data(m) => ("data", m),
            CliError::Internal(m) => ("internal", m),
        };
        write!(f, "error[{kind}]: {}", one_line(message))
    }
}

fn one_line(text: &str) -> String {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .collect::<Vec<_>>()
        .join("; ")
}

fn data_err(err: impl fmt::Display) -> CliError {
    CliError::Data(err.to_string())
}

macro_rules! impl_data_error {
    ($($ty:ty),*) => {$(
        impl From<$ty> for CliError {
            fn from(err: $ty) -> Self {
                data_err(err)
            }
        }
    )*};
}

impl_data_error!(
    geolex::gazetteer::GazetteerError,
    geolex::corpus::CorpusError,
    geolex::classify::ClassifyError,
    geolex::eval::EvalError,
    geolex::analytics::AnalyticsError,
    geolex::synth::SynthError
);

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            if matches!(
                err.kind(),
                ErrorKind::DisplayHelp
                    | ErrorKind::DisplayVersion
                    | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
            ) {
                let _ = write_stdout(&err.to_string());
                return 0;
            }
            let message = err.to_string();
            let message = message.strip_prefix("error: ").unwrap_or(&message);
            eprintln!("{}", CliError::Usage(message.to_string()));
            return 1;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("{err}");
            err.code()
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Resolve(args) => cmd_resolve(args),
        Command::Train(args) => cmd_train(args),
        Command::Predict(args) => cmd_predict(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Report(report) => cmd_report(report),
        Command::Timeline(args) => cmd_timeline(args),
        Command::Synth(args) => cmd_synth(args),
    }
}

// ---------------------------------------------------------------------------
// Input plumbing
// ---------------------------------------------------------------------------

fn input_path(path: &Path) -> PathBuf {
    if path.is_relative() {
        if let Some(dir) = std::env::var_os(DATA_DIR_ENV) {
            return PathBuf::from(dir).join(path);
        }
    }
    path.to_path_buf()
}

fn open_input(path: &Path) -> Result<File, CliError> {
    let resolved = input_path(path);
    File::open(&resolved)
        .map_err(|err| CliError::Data(format!("cannot read {}: {err}", resolved.display())))
}

fn build_name_index(args: &GazetteerArgs) -> Result<(LocationHierarchy, NameIndex), CliError> {
    let hierarchy = load_hierarchy(open_input(&args.hierarchy)?)?;
    let mut index = NameIndex::from_generated(&expand_templates(&hierarchy), &hierarchy);
    if let Some(alias_path) = &args.aliases {
        for alias in load_aliases(open_input(alias_path)?, &hierarchy)? {
            index.add_alias(&alias, &hierarchy)?;
        }
    }
    Ok((hierarchy, index))
}

fn load_posts(path: &Path) -> Result<Vec<MicroPost>, CliError> {
    let ingested = ingest(BufReader::new(open_input(path)?))?;
    if !ingested.warnings.is_empty() {
        eprintln!(
            "warning: skipped {} malformed or duplicate lines in {}",
            ingested.warnings.len(),
            path.display()
        );
    }
    Ok(ingested.posts)
}

fn load_resolved_corpus(
    args: &CorpusArgs,
) -> Result<(LocationHierarchy, NameIndex, Vec<MicroPost>), CliError> {
    let (hierarchy, index) = build_name_index(&args.gazetteer)?;
    let mut posts = load_posts(&args.posts)?;
    resolve_authors(&mut posts, &index);
    Ok((hierarchy, index, posts))
}

// ---------------------------------------------------------------------------
// Output plumbing
// ---------------------------------------------------------------------------

fn write_stdout(content: &str) -> Result<(), CliError> {
    use std::io::Write;
    match std::io::stdout().write_all(content.as_bytes()) {
        Ok(()) => Ok(()),
        // A closed pipe (e.g. `geolex ... | head`) is how the consumer
        // says it has read enough.
        Err(err) if err.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        Err(err) => Err(CliError::Internal(format!("cannot write stdout: {err}"))),
    }
}

fn emit(output: &OutputArgs, content: String) -> Result<(), CliError> {
    match &output.out {
        Some(path) => std::fs::write(path, content).map_err(|err| {
            CliError::Internal(format!("cannot write {}: {err}", path.display()))
        }),
        None => write_stdout(&content),
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|err| CliError::Internal(format!("serialization failed: {err}")))
}

fn to_csv<F>(write: F) -> Result<String, CliError>
where
    F: FnOnce(&mut Vec<u8>) -> csv::Result<()>,
{
    let mut buffer = Vec::new();
    write(&mut buffer).map_err(|err| CliError::Internal(format!("csv output failed: {err}")))?;
    String::from_utf8(buffer)
        .map_err(|err| CliError::Internal(format!("csv output is not utf-8: {err}")))
}

fn reject_svg(output: &OutputArgs) -> Result<(), CliError> {
    if output.format == Format::Svg {
        return Err(CliError::Usage(
            "svg output is only available for `report timeseries`".into(),
        ));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Model persistence
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    index: LocationIndex,
}

fn save_model(path: &Path, index: &LocationIndex) -> Result<(), CliError> {
    let file = ModelFile {
        format_version: MODEL_FORMAT_VERSION,
        index: index.clone(),
    };
    let json = serde_json::to_string(&file)
        .map_err(|err| CliError::Internal(format!("model serialization failed: {err}")))?;
    std::fs::write(path, json)
        .map_err(|err| CliError::Internal(format!("cannot write {}: {err}", path.display())))
}

fn load_model(path: &Path) -> Result<LocationIndex, CliError> {
    let mut json = String::new();
    open_input(path)?
        .read_to_string(&mut json)
        .map_err(|err| CliError::Data(format!("cannot read {}: {err}", path.display())))?;
    let file: ModelFile = serde_json::from_str(&json)
        .map_err(|err| CliError::Data(format!("invalid model file {}: {err}", path.display())))?;
    if file.format_version != MODEL_FORMAT_VERSION {
        return Err(CliError::Data(format!(
            "unsupported model format_version {} in {} (expected {MODEL_FORMAT_VERSION})",
            file.format_version,
            path.display()
        )));
    }
    Ok(file.index)
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

fn cmd_resolve(args: ResolveArgs) -> Result<(), CliError> {
    reject_svg(&args.output)?;
    let (_, index) = build_name_index(&args.gazetteer)?;

    let rows: Vec<serde_json::Value> = if let Some(text) = &args.text {
        let resolved = index.resolve(text);
        vec![json!({
            "input": text,
            "unit_id": resolved.as_ref().map(|r| r.unit_id.clone()),
            "level": resolved.as_ref().map(|r| r.level.as_str()),
        })]
    } else if let Some(posts_path) = &args.posts {
        load_posts(posts_path)?
            .iter()
            .map(|post| {
                let resolved = post
                    .profile_location
                    .as_deref()
                    .and_then(|text| index.resolve(text));
                json!({
                    "post_id": post.id,
                    "author_id": post.author_id,
                    "input": post.profile_location,
                    "unit_id": resolved.as_ref().map(|r| r.unit_id.clone()),
                    "level": resolved.as_ref().map(|r| r.level.as_str()),
                })
            })
            .collect()
    } else {
        return Err(CliError::Usage(
            "resolve needs either --text or --posts".into(),
        ));
    };

    let content = match args.output.format {
        Format::Json => to_json(&rows)?,
        Format::Csv => to_csv(|buffer| {
            let mut writer = csv::Writer::from_writer(buffer);
            writer.write_record(["input", "unit_id", "level"])?;
            for row in &rows {
                writer.write_record([
                    row["input"].as_str().unwrap_or(""),
                    row["unit_id"].as_str().unwrap_or(""),
                    row["level"].as_str().unwrap_or(""),
                ])?;
            }
            writer.flush()?;
            Ok(())
        })?,
        Format::Svg => unreachable!("rejected above"),
    };
    emit(&args.output, content)
}

fn cmd_train(args: TrainArgs) -> Result<(), CliError> {
    let (hierarchy, _, posts) = load_resolved_corpus(&args.corpus)?;
    let training = filter_for_training(&posts);
    let spec = args.classifier.spec();
    let index = classify::train(&training, &hierarchy, &spec, args.seed)?;
    save_model(&args.out, &index)?;
    let summary = json!({
        "model": args.out.display().to_string(),
        "spec": spec,
        "locations": index.references.len(),
        "training_posts": training.len(),
    });
    write_stdout(&format!("{summary}\n"))?;
    Ok(())
}

fn prediction_rows(prediction: &classify::Prediction, top: Option<usize>) -> Vec<serde_json::Value> {
    let limit = top.unwrap_or(prediction.ranking.len());
    prediction
        .ranking
        .iter()
        .take(limit)
        .enumerate()
        .map(|(i, (unit_id, score))| {
            json!({ "rank": i + 1, "unit_id": unit_id, "score": score })
        })
        .collect()
}

fn cmd_predict(args: PredictArgs) -> Result<(), CliError> {
    reject_svg(&args.output)?;
    let index = load_model(&args.model)?;
    if let Some(level) = args.level {
        let requested: GroupLevel = level.into();
        if requested != index.spec.level {
            return Err(CliError::Data(format!(
                "model {} was trained at {} level, not {}",
                args.model.display(),
                index.spec.level.as_str(),
                requested.as_str()
            )));
        }
    }
    let prediction = index.predict(&args.text);
    let rows = prediction_rows(&prediction, args.top);

    let content = match args.output.format {
        Format::Json => to_json(&json!({
            "text": args.text,
            "chosen": prediction.chosen,
            "ranking": rows,
        }))?,
        Format::Csv => to_csv(|buffer| {
            let mut writer = csv::Writer::from_writer(buffer);
            writer.write_record(["rank", "unit_id", "score"])?;
            for row in &rows {
                writer.write_record([
                    row["rank"].to_string(),
                    row["unit_id"].as_str().unwrap_or("").to_string(),
                    format!("{:.6}", row["score"].as_f64().unwrap_or(0.0)),
                ])?;
            }
            writer.flush()?;
            Ok(())
        })?,
        Format::Svg => unreachable!("rejected above"),
    };
    emit(&args.output, content)
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<(), CliError> {
    reject_svg(&args.output)?;
    let (hierarchy, _, posts) = load_resolved_corpus(&args.corpus)?;
    let training = filter_for_training(&posts);
    let spec = args.classifier.spec();
    let eligible = select_locations(&training, &hierarchy, spec.level);
    let restricted = restrict_to(&training, &hierarchy, spec.level, &eligible);
    let report = cross_validate(
        &restricted,
        &hierarchy,
        &spec,
        args.folds,
        args.seed,
        args.jobs,
    )?;

    let content = match args.output.format {
        Format::Json => to_json(&report)?,
        Format::Csv => to_csv(|buffer| report.write_csv(buffer))?,
        Format::Svg => unreachable!("rejected above"),
    };
    emit(&args.output, content)
}

fn cmd_report(report: ReportCommand) -> Result<(), CliError> {
    match report {
        ReportCommand::Hashtags {
            corpus,
            level,
            top_k,
            min_posts,
            output,
        } => {
            reject_svg(&output)?;
            let (hierarchy, _, posts) = load_resolved_corpus(&corpus)?;
            let refs: Vec<&MicroPost> = posts.iter().collect();
            let report = discriminative_hashtags(&refs, &hierarchy, level.into(), top_k, min_posts);
            let content = match output.format {
                Format::Json => to_json(&report)?,
                Format::Csv => to_csv(|buffer| report.write_csv(buffer))?,
                Format::Svg => unreachable!("rejected above"),
            };
            emit(&output, content)
        }
        ReportCommand::Population {
            corpus,
            census,
            level,
            output,
        } => {
            reject_svg(&output)?;
            let (hierarchy, _, posts) = load_resolved_corpus(&corpus)?;
            let census = load_census(open_input(&census)?)?;
            let refs: Vec<&MicroPost> = posts.iter().collect();
            let report = population_correlation(&refs, &hierarchy, level.into(), &census)?;
            let content = match output.format {
                Format::Json => to_json(&report)?,
                Format::Csv => to_csv(|buffer| report.write_csv(buffer))?,
                Format::Svg => unreachable!("rejected above"),
            };
            emit(&output, content)
        }
        ReportCommand::Activity {
            corpus,
            level,
            output,
        } => {
            reject_svg(&output)?;
            let (hierarchy, _, posts) = load_resolved_corpus(&corpus)?;
            let refs: Vec<&MicroPost> = posts.iter().collect();
            let report = activity_stats(&refs, &hierarchy, level.into());
            let content = match output.format {
                Format::Json => to_json(&report)?,
                Format::Csv => to_csv(|buffer| report.write_csv(buffer))?,
                Format::Svg => unreachable!("rejected above"),
            };
            emit(&output, content)
        }
        ReportCommand::Timeseries {
            corpus,
            level,
            bin_minutes,
            output,
        } => {
            if bin_minutes < 1 {
                return Err(CliError::Usage("--bin-minutes must be at least 1".into()));
            }
            let (hierarchy, _, posts) = load_resolved_corpus(&corpus)?;
            let refs: Vec<&MicroPost> = posts.iter().collect();
            let series = time_series(
                &refs,
                &hierarchy,
                level.into(),
                Duration::minutes(bin_minutes),
            );
            let content = match output.format {
                Format::Json => to_json(&series)?,
                Format::Csv => to_csv(|buffer| series.write_csv(buffer))?,
                Format::Svg => series.to_svg(),
            };
            emit(&output, content)
        }
        ReportCommand::Coverage { corpus, output } => {
            reject_svg(&output)?;
            let (_, _, posts) = load_resolved_corpus(&corpus)?;
            let refs: Vec<&MicroPost> = posts.iter().collect();
            let report = coverage(&refs);
            let content = match output.format {
                Format::Json => to_json(&report)?,
                Format::Csv => to_csv(|buffer| report.write_csv(buffer))?,
                Format::Svg => unreachable!("rejected above"),
            };
            emit(&output, content)
        }
    }
}

fn cmd_timeline(args: TimelineArgs) -> Result<(), CliError> {
    reject_svg(&args.output)?;
    if args.quota < 1 {
        return Err(CliError::Usage("--quota must be at least 1".into()));
    }
    let index = load_model(&args.model)?;
    let posts = load_posts(&args.posts)?;
    let refs: Vec<&MicroPost> = posts.iter().collect();
    let ordered = diverse_timeline(&index, &refs, args.quota);
    let rows: Vec<serde_json::Value> = ordered
        .iter()
        .enumerate()
        .map(|(i, post)| {
            json!({
                "position": i + 1,
                "id": post.id,
                "author_id": post.author_id,
                "location": index.predict(&post.text).chosen,
                "text": post.text,
            })
        })
        .collect();

    let content = match args.output.format {
        Format::Json => to_json(&rows)?,
        Format::Csv => to_csv(|buffer| {
            let mut writer = csv::Writer::from_writer(buffer);
            writer.write_record(["position", "id", "location"])?;
            for row in &rows {
                writer.write_record([
                    row["position"].to_string(),
                    row["id"].as_str().unwrap_or("").to_string(),
                    row["location"].as_str().unwrap_or("").to_string(),
                ])?;
            }
            writer.flush()?;
            Ok(())
        })?,
        Format::Svg => unreachable!("rejected above"),
    };
    emit(&args.output, content)
}

fn cmd_synth(args: SynthArgs) -> Result<(), CliError> {
    let config = SynthConfig {
        n_locations: args.locations,
        zipf_exponent: args.zipf,
        users_per_location: args.users_per_location,
        posts_per_user_mean: args.posts_per_user,
        shared_vocabulary: args.shared_vocab,
        local_vocabulary: args.local_vocab,
        mixing: args.mixing,
        hashtag_fraction: args.hashtag_fraction,
        tokens_per_post: args.tokens_per_post,
        seed: args.seed,
    };
    let corpus = generate(&config)?;
    corpus.write_to_dir(&args.out_dir).map_err(|err| {
        CliError::Internal(format!("cannot write {}: {err}", args.out_dir.display()))
    })?;
    let summary = json!({
        "dir": args.out_dir.display().to_string(),
        "posts": corpus.posts.len(),
        "users": corpus.user_locations.len(),
        "locations": corpus.provinces.len(),
        "seed": args.seed,
    });
    write_stdout(&format!("{summary}\n"))?;
    Ok(())
}
