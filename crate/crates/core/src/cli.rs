//! The `zsplit` command line: JSON on stdout, diagnostics on stderr.
//!
//! Exit codes: 0 success, 1 usage or parse error, 2 infeasible split,
//! 3 dataset validation failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use ndarray::Array2;
use serde::Serialize;

use crate::audit::{self, AttributeStats};
use crate::error::{Error, Result};
use crate::io::{self, FileFormat, PredictionSet, ScoreKind};
use crate::loss;
use crate::metrics;
use crate::model::{validate_dataset, Dataset, Partition, SplitAssignment, SplitConfig};
use crate::split;
use crate::synth::{self, SynthConfig};

/// Environment variable capping the number of split-search workers.
pub const THREADS_ENV: &str = "ZSPLIT_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(i32)]
pub enum ExitStatus {
    Success = 0,
    Usage = 1,
    Infeasible = 2,
    Validation = 3,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }

    fn of(error: &Error) -> ExitStatus {
        match error {
            Error::Infeasible { .. } => ExitStatus::Infeasible,
            Error::InvalidDataset(_) | Error::Content { .. } => ExitStatus::Validation,
            _ => ExitStatus::Usage,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "zsplit",
    version,
    about = "Identity-disjoint dataset splits, leakage audits and attribute-recognition metrics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build an identity-disjoint train/valid/test split.
    #[command(long_about = SPLIT_ABOUT)]
    Split(SplitArgs),
    /// Check an existing split against the criteria and measure identity leakage.
    Audit(AuditArgs),
    /// Positive ratios, imbalance weights and identity distribution.
    Stats(StatsArgs),
    /// Evaluate predictions: mA plus instance accuracy, precision, recall, F1.
    #[command(long_about = EVAL_ABOUT)]
    Eval(EvalArgs),
    /// Imbalance weights e^(1-r) for positives and e^r for negatives.
    Weights(WeightsArgs),
    /// Weighted binary cross-entropy of logits, optionally with its gradient.
    Loss(LossArgs),
    /// Generate a seeded synthetic dataset.
    Synth(SynthArgs),
    /// Check a dataset file and list every invariant violation.
    Validate(DatasetArgs),
}

const SPLIT_ABOUT: &str = "\
Build an identity-disjoint train/valid/test split.

The split must satisfy, with I the identity sets and N the image counts:
  C1  |I_train| : |I_valid| : |I_test| within --ratio-tol (relative) of --ratio
  C2  identity sets pairwise disjoint
  C3  | |I_valid| - |I_test| | < |I_all| * --tid
  C4  | N_valid - N_test | < --timg
  C5  | R_valid,j - R_test,j | < --tattr for every attribute j
Images without an identity count as singleton identities. Comparisons in
C3-C5 are strict. The search deals identity groups out at random, then
relocates and swaps whole groups while the violation strictly decreases,
restarting with derived seeds up to --max-restarts times.";

const EVAL_ABOUT: &str = "\
Evaluate attribute predictions.

Conventions: a score equal to --threshold is positive; logits go through the
sigmoid first. Per image, 0/0 is 1 when the true and predicted label sets
are both empty and 0 otherwise. F1 is the harmonic mean of mean precision
and mean recall. Attributes without positives or negatives in the evaluated
subset are excluded from mA and listed.

With --split only the test partition is evaluated; --by-identity-overlap
additionally reports test images whose identity appears in train
(common-identity) separately from the rest (unique-identity).";

#[derive(Debug, Args)]
struct DatasetArgs {
    /// Dataset file (CSV with attr:<name> columns, or JSONL).
    #[arg(long)]
    dataset: PathBuf,
    /// Dataset format; guessed from the extension when omitted.
    #[arg(long)]
    format: Option<FileFormat>,
    /// Attribute catalog for JSONL datasets [default: <stem>.catalog.json].
    #[arg(long)]
    catalog: Option<PathBuf>,
}

impl DatasetArgs {
    fn format(&self) -> FileFormat {
        self.format
            .unwrap_or_else(|| FileFormat::from_path(&self.dataset))
    }

    fn load(&self) -> Result<Dataset> {
        match (self.format(), &self.catalog) {
            (FileFormat::Jsonl, Some(catalog)) => io::load_dataset_jsonl(&self.dataset, catalog),
            (format, _) => io::load_dataset(&self.dataset, format),
        }
    }
}

#[derive(Debug, Args)]
struct ThresholdArgs {
    /// Identity-balance threshold, as a fraction of all identities.
    #[arg(long, default_value_t = 0.01)]
    tid: f64,
    /// Image-balance threshold, in images.
    #[arg(long, default_value_t = 300)]
    timg: u64,
    /// Attribute positive-ratio gap threshold.
    #[arg(long, default_value_t = 0.03)]
    tattr: f64,
    /// Target identity ratio train:valid:test.
    #[arg(long, default_value = "3:1:1", value_parser = parse_ratio)]
    ratio: [f64; 3],
    /// Relative tolerance on each identity proportion.
    #[arg(long = "ratio-tol", default_value_t = 0.10)]
    ratio_tol: f64,
    /// Also require the attribute-gap bound between train and test.
    #[arg(long = "c5-train-pair")]
    c5_train_pair: bool,
}

impl ThresholdArgs {
    fn config(&self) -> SplitConfig {
        SplitConfig {
            t_id: self.tid,
            t_img: self.timg,
            t_attr: self.tattr,
            ratio_targets: self.ratio,
            ratio_tolerance: self.ratio_tol,
            c5_train_pair: self.c5_train_pair,
            ..SplitConfig::default()
        }
    }
}

fn parse_ratio(s: &str) -> std::result::Result<[f64; 3], String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("expected train:valid:test, got {s:?}"));
    }
    let mut out = [0.0; 3];
    for (slot, part) in out.iter_mut().zip(parts) {
        *slot = part
            .trim()
            .parse::<f64>()
            .map_err(|e| format!("{part:?}: {e}"))?;
    }
    Ok(out)
}

#[derive(Debug, Args)]
struct SplitArgs {
    #[command(flatten)]
    dataset: DatasetArgs,
    #[command(flatten)]
    thresholds: ThresholdArgs,
    /// Search seed; restarts use independent streams derived from it.
    #[arg(long)]
    seed: u64,
    #[arg(long = "max-restarts", default_value_t = 20)]
    max_restarts: u32,
    /// Proposal budget per restart.
    #[arg(long = "max-moves", default_value_t = 50_000)]
    max_moves: u64,
    /// Split file to write; printed to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AuditArgs {
    #[command(flatten)]
    dataset: DatasetArgs,
    #[command(flatten)]
    thresholds: ThresholdArgs,
    /// Split file to audit.
    #[arg(long)]
    split: PathBuf,
}

#[derive(Debug, Args)]
struct StatsArgs {
    #[command(flatten)]
    dataset: DatasetArgs,
    /// Split file; without it the whole dataset is treated as the training set.
    #[arg(long)]
    split: Option<PathBuf>,
    /// Partition to measure.
    #[arg(long, default_value = "train")]
    partition: Partition,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[command(flatten)]
    dataset: DatasetArgs,
    /// Prediction file (CSV `image_id,<attr names>` or JSONL).
    #[arg(long)]
    pred: PathBuf,
    #[arg(long, default_value = "probs")]
    kind: ScoreKind,
    /// Binarization threshold on probabilities.
    #[arg(long, default_value_t = PredictionSet::DEFAULT_THRESHOLD)]
    threshold: f64,
    /// Split file; restricts evaluation to the test partition.
    #[arg(long)]
    split: Option<PathBuf>,
    /// Report common-identity and unique-identity test images separately.
    #[arg(long = "by-identity-overlap", requires = "split")]
    by_identity_overlap: bool,
}

#[derive(Debug, Args)]
struct WeightsArgs {
    /// Dataset to measure ratios on.
    #[arg(long, required_unless_present = "r")]
    dataset: Option<PathBuf>,
    #[arg(long)]
    format: Option<FileFormat>,
    #[arg(long)]
    catalog: Option<PathBuf>,
    /// Split file; ratios come from its train partition.
    #[arg(long)]
    split: Option<PathBuf>,
    /// Evaluate the weights for explicit positive ratios instead.
    #[arg(long, num_args = 1.., conflicts_with = "dataset")]
    r: Vec<f64>,
}

#[derive(Debug, Args)]
struct LossArgs {
    #[command(flatten)]
    dataset: DatasetArgs,
    /// Logits file in the prediction schema.
    #[arg(long)]
    pred: PathBuf,
    /// CSV `attribute,ratio` with training-set positive ratios.
    #[arg(long, required_unless_present = "split")]
    ratios: Option<PathBuf>,
    /// Split file; ratios come from its train partition.
    #[arg(long, conflicts_with = "ratios")]
    split: Option<PathBuf>,
    /// Also print the gradient with respect to every logit.
    #[arg(long)]
    grad: bool,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 3000)]
    identities: usize,
    #[arg(long = "mean-images", default_value_t = 4.0)]
    mean_images: f64,
    #[arg(long, default_value_t = 35)]
    attributes: usize,
    #[arg(long = "prevalence-min", default_value_t = 0.05)]
    prevalence_min: f64,
    #[arg(long = "prevalence-max", default_value_t = 0.8)]
    prevalence_max: f64,
    /// Fraction of images that keep their identity.
    #[arg(long, default_value_t = 0.9)]
    coverage: f64,
    /// Per-image label flip probability.
    #[arg(long, default_value_t = 0.02)]
    noise: f64,
    #[arg(long)]
    out: PathBuf,
    /// Output format; guessed from the extension when omitted.
    #[arg(long)]
    format: Option<FileFormat>,
}

/// Runs the CLI against the process's stdout and stderr.
pub fn run<I, T>(argv: I) -> ExitStatus
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

/// Runs the CLI with explicit output streams.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> ExitStatus
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() {
                ExitStatus::Usage
            } else {
                let _ = write!(out, "{}", e.render());
                ExitStatus::Success
            };
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(status) => status,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if let Error::Infeasible {
                best_report,
                best_objective,
                reason,
            } = &e
            {
                let _ = emit(
                    out,
                    &InfeasibleOutput {
                        error: "infeasible",
                        reason,
                        best_objective: *best_objective,
                        best_report: best_report.as_deref(),
                    },
                );
            }
            ExitStatus::of(&e)
        }
    }
}

#[derive(Serialize)]
struct InfeasibleOutput<'a> {
    error: &'static str,
    reason: &'a str,
    best_objective: Option<f64>,
    best_report: Option<&'a crate::model::SplitReport>,
}

fn emit<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    writeln!(out, "{text}").map_err(|e| Error::io("<stdout>", e))
}

fn threads_from_env() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn dispatch(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<ExitStatus> {
    match command {
        Command::Split(args) => cmd_split(args, out, err),
        Command::Audit(args) => cmd_audit(args, out),
        Command::Stats(args) => cmd_stats(args, out),
        Command::Eval(args) => cmd_eval(args, out, err),
        Command::Weights(args) => cmd_weights(args, out),
        Command::Loss(args) => cmd_loss(args, out),
        Command::Synth(args) => cmd_synth(args, out),
        Command::Validate(args) => cmd_validate(args, out),
    }
}

#[derive(Serialize)]
struct SplitOutput<'a> {
    out: &'a Path,
    restart: u32,
    proposals: u64,
    report: &'a crate::model::SplitReport,
}

fn cmd_split(args: SplitArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<ExitStatus> {
    let dataset = args.dataset.load()?;
    let config = SplitConfig {
        seed: args.seed,
        max_restarts: args.max_restarts,
        max_moves: args.max_moves,
        threads: Some(threads_from_env()),
        ..args.thresholds.config()
    };
    let built = split::build_zero_shot_split(&dataset, &config)?;
    let file = io::SplitFile::new(
        &dataset,
        &built.assignment,
        Some(&config),
        Some(&built.report),
    )?;
    let _ = writeln!(
        err,
        "split found on restart {} ({} train / {} valid / {} test images)",
        built.restart,
        file.train.len(),
        file.valid.len(),
        file.test.len()
    );
    match &args.out {
        Some(path) => {
            std::fs::write(path, file.to_json()?).map_err(|e| Error::io(path, e))?;
            emit(
                out,
                &SplitOutput {
                    out: path,
                    restart: built.restart,
                    proposals: built.proposals,
                    report: &built.report,
                },
            )?;
        }
        None => write!(out, "{}", file.to_json()?).map_err(|e| Error::io("<stdout>", e))?,
    }
    Ok(ExitStatus::Success)
}

#[derive(Serialize)]
struct AuditOutput {
    report: crate::model::SplitReport,
    overlap: audit::OverlapReport,
}

fn cmd_audit(args: AuditArgs, out: &mut dyn Write) -> Result<ExitStatus> {
    let dataset = args.dataset.load()?;
    let config = args.thresholds.config();
    config.validate()?;
    let assignment = io::load_split(&args.split, &dataset)?;
    let report = split::criteria_evaluate(&dataset, &assignment, &config)?;
    let overlap = audit::overlap_report(&dataset, &assignment)?;
    emit(out, &AuditOutput { report, overlap })?;
    Ok(ExitStatus::Success)
}

#[derive(Serialize)]
struct StatsOutput {
    positive_ratios: AttributeStats,
    identity_distribution: audit::IdentityDistribution,
}

fn cmd_stats(args: StatsArgs, out: &mut dyn Write) -> Result<ExitStatus> {
    let dataset = args.dataset.load()?;
    let output = match &args.split {
        Some(path) => {
            let assignment = io::load_split(path, &dataset)?;
            StatsOutput {
                positive_ratios: audit::positive_ratios(&dataset, &assignment, args.partition)?,
                identity_distribution: audit::identity_distribution(
                    &dataset,
                    &assignment,
                    args.partition,
                )?,
            }
        }
        None => {
            let everything = SplitAssignment::new(vec![Partition::Train; dataset.len()]);
            StatsOutput {
                positive_ratios: audit::positive_ratios_all(&dataset)?,
                identity_distribution: audit::identity_distribution(
                    &dataset,
                    &everything,
                    Partition::Train,
                )?,
            }
        }
    };
    emit(out, &output)?;
    Ok(ExitStatus::Success)
}

fn cmd_eval(args: EvalArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<ExitStatus> {
    let dataset = args.dataset.load()?;
    let predictions =
        io::load_predictions(&args.pred, &dataset, args.kind)?.with_threshold(args.threshold)?;
    let warn_excluded = |err: &mut dyn Write, report: &metrics::MetricsReport| {
        if !report.excluded.is_empty() {
            let _ = writeln!(
                err,
                "warning: {:?} subset: {} attribute(s) excluded from mA: {}",
                report.subset,
                report.excluded.len(),
                report.excluded.join(", ")
            );
        }
    };
    match &args.split {
        None => {
            let report = metrics::evaluate_covered(&dataset, &predictions)?;
            warn_excluded(err, &report);
            emit(out, &report)?;
        }
        Some(path) => {
            let assignment = io::load_split(path, &dataset)?;
            if args.by_identity_overlap {
                let report = metrics::partitioned_eval(&dataset, &assignment, &predictions)?;
                warn_excluded(err, &report.all);
                emit(out, &report)?;
            } else {
                let test: Vec<usize> = assignment.members(Partition::Test).collect();
                let report =
                    metrics::evaluate(&dataset, &predictions, &test, metrics::Subset::All)?;
                warn_excluded(err, &report);
                emit(out, &report)?;
            }
        }
    }
    Ok(ExitStatus::Success)
}

#[derive(Serialize)]
struct WeightRow {
    #[serde(skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    ratio: f64,
    weight_positive: f64,
    weight_negative: f64,
}

fn cmd_weights(args: WeightsArgs, out: &mut dyn Write) -> Result<ExitStatus> {
    let rows: Vec<WeightRow> = if let Some(path) = &args.dataset {
        let dataset = DatasetArgs {
            dataset: path.clone(),
            format: args.format,
            catalog: args.catalog.clone(),
        }
        .load()?;
        let stats = train_ratios(&dataset, args.split.as_deref())?;
        stats
            .attributes
            .into_iter()
            .map(|a| WeightRow {
                name: Some(a.name),
                ratio: a.ratio,
                weight_positive: a.weight_positive,
                weight_negative: a.weight_negative,
            })
            .collect()
    } else {
        args.r
            .iter()
            .map(|&r| {
                Ok(WeightRow {
                    name: None,
                    ratio: r,
                    weight_positive: audit::sample_weight(r, true)?,
                    weight_negative: audit::sample_weight(r, false)?,
                })
            })
            .collect::<Result<_>>()?
    };
    emit(out, &rows)?;
    Ok(ExitStatus::Success)
}

fn train_ratios(dataset: &Dataset, split: Option<&Path>) -> Result<AttributeStats> {
    match split {
        Some(path) => {
            let assignment = io::load_split(path, dataset)?;
            audit::positive_ratios(dataset, &assignment, Partition::Train)
        }
        None => audit::positive_ratios_all(dataset),
    }
}

/// Reads `attribute,ratio` rows and orders them like the catalog.
pub fn read_ratios_csv<R: std::io::Read>(reader: R, dataset: &Dataset) -> Result<Vec<f64>> {
    let catalog = dataset.catalog();
    let mut ratios = vec![None; catalog.len()];
    let mut rdr = csv::Reader::from_reader(reader);
    for row in rdr.records() {
        let row = row.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        if row.len() != 2 {
            return Err(Error::Parse {
                line,
                message: "expected attribute,ratio".into(),
            });
        }
        let j = catalog.index_of(&row[0]).ok_or_else(|| Error::Parse {
            line,
            message: format!("unknown attribute {:?}", &row[0]),
        })?;
        let r: f64 = row[1].trim().parse().map_err(|_| Error::Parse {
            line,
            message: format!("cannot read ratio {:?}", &row[1]),
        })?;
        ratios[j] = Some(r);
    }
    ratios
        .into_iter()
        .zip(catalog.names())
        .map(|(r, name)| r.ok_or_else(|| Error::Domain(format!("no ratio for attribute {name:?}"))))
        .collect()
}

#[derive(Serialize)]
struct LossOutput {
    rows: usize,
    loss: f64,
    ratios: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    image_ids: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gradient: Option<Vec<Vec<f64>>>,
}

fn cmd_loss(args: LossArgs, out: &mut dyn Write) -> Result<ExitStatus> {
    let dataset = args.dataset.load()?;
    let predictions = io::load_predictions(&args.pred, &dataset, ScoreKind::Logits)?;
    let ratios = match (&args.ratios, &args.split) {
        (Some(path), _) => {
            let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
            read_ratios_csv(file, &dataset)?
        }
        (None, split) => train_ratios(&dataset, split.as_deref())?.ratios(),
    };
    let m = dataset.attribute_count();
    let n = predictions.len();
    let index = dataset.index_by_id();
    let mut logits = Array2::zeros((n, m));
    let mut labels = Array2::zeros((n, m));
    for (row, (id, scores)) in predictions.rows().enumerate() {
        let record = &dataset.records()[index[id]];
        for j in 0..m {
            logits[[row, j]] = scores[j];
            labels[[row, j]] = record.labels[j];
        }
    }
    let value = loss::weighted_bce(logits.view(), labels.view(), &ratios)?;
    let gradient = if args.grad {
        let g = loss::weighted_bce_grad(logits.view(), labels.view(), &ratios)?;
        Some(g.rows().into_iter().map(|r| r.to_vec()).collect())
    } else {
        None
    };
    emit(
        out,
        &LossOutput {
            rows: n,
            loss: value,
            ratios,
            image_ids: args.grad.then(|| predictions.image_ids().to_vec()),
            gradient,
        },
    )?;
    Ok(ExitStatus::Success)
}

#[derive(Serialize)]
struct SynthOutput<'a> {
    out: &'a Path,
    images: usize,
    identities: usize,
    unlabeled_images: usize,
    attributes: usize,
}

fn cmd_synth(args: SynthArgs, out: &mut dyn Write) -> Result<ExitStatus> {
    let config = SynthConfig {
        identity_count: args.identities,
        mean_images_per_identity: args.mean_images,
        attribute_count: args.attributes,
        prevalence_min: args.prevalence_min,
        prevalence_max: args.prevalence_max,
        coverage: args.coverage,
        flip_noise: args.noise,
        seed: args.seed,
    };
    let dataset = synth::generate(&config)?;
    let format = args
        .format
        .unwrap_or_else(|| FileFormat::from_path(&args.out));
    io::save_dataset(&dataset, &args.out, format)?;
    let identities = split::identity_groups(&dataset)
        .iter()
        .filter(|g| !g.is_synthetic())
        .count();
    emit(
        out,
        &SynthOutput {
            out: &args.out,
            images: dataset.len(),
            identities,
            unlabeled_images: dataset
                .records()
                .iter()
                .filter(|r| r.identity.is_none())
                .count(),
            attributes: dataset.attribute_count(),
        },
    )?;
    Ok(ExitStatus::Success)
}

fn cmd_validate(args: DatasetArgs, out: &mut dyn Write) -> Result<ExitStatus> {
    let dataset = match (args.format(), &args.catalog) {
        (FileFormat::Jsonl, Some(catalog)) => {
            let file = std::fs::File::open(catalog).map_err(|e| Error::io(catalog, e))?;
            let catalog = io::read_catalog(file)?;
            let data =
                std::fs::File::open(&args.dataset).map_err(|e| Error::io(&args.dataset, e))?;
            io::read_dataset_jsonl_unchecked(data, catalog)?
        }
        (format, _) => io::load_dataset_unchecked(&args.dataset, format)?,
    };
    let validation = validate_dataset(&dataset);
    emit(out, &validation)?;
    Ok(if validation.ok {
        ExitStatus::Success
    } else {
        ExitStatus::Validation
    })
}
