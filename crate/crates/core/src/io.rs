//! Canonical file formats: dataset CSV/JSONL, split JSON and prediction
//! CSV/JSONL.
//!
//! Dataset CSV header is `image_id,identity,attr:<name>...`; an empty
//! identity cell means the image has no identity annotation. Dataset JSONL
//! holds one `{"image_id", "identity"?, "labels"}` object per line and takes
//! its attribute order from a side-car catalog (a JSON array of names,
//! `<stem>.catalog.json` by default).

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    validate_dataset, AttributeCatalog, Dataset, Partition, Record, SplitAssignment, SplitConfig,
    SplitReport,
};

pub const ATTR_PREFIX: &str = "attr:";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FileFormat {
    Csv,
    Jsonl,
}

impl FileFormat {
    /// Guesses the format from the file extension, defaulting to CSV.
    pub fn from_path(path: &Path) -> FileFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("jsonl") || ext.eq_ignore_ascii_case("json") => {
                FileFormat::Jsonl
            }
            _ => FileFormat::Csv,
        }
    }
}

impl std::str::FromStr for FileFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(FileFormat::Csv),
            "jsonl" => Ok(FileFormat::Jsonl),
            other => Err(Error::Domain(format!("unknown format {other:?}"))),
        }
    }
}

/// Default side-car catalog location for a JSONL dataset.
pub fn catalog_path_for(dataset_path: &Path) -> PathBuf {
    let stem = dataset_path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("dataset");
    dataset_path.with_file_name(format!("{stem}.catalog.json"))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

// ---------------------------------------------------------------------------
// Datasets

pub fn load_dataset(path: &Path, format: FileFormat) -> Result<Dataset> {
    match format {
        FileFormat::Csv => read_dataset_csv(open(path)?),
        FileFormat::Jsonl => {
            let catalog_path = catalog_path_for(path);
            let catalog = read_catalog(open(&catalog_path)?)?;
            read_dataset_jsonl(open(path)?, catalog)
        }
    }
}

/// Loads without enforcing dataset invariants; see
/// [`read_dataset_csv_unchecked`].
pub fn load_dataset_unchecked(path: &Path, format: FileFormat) -> Result<Dataset> {
    match format {
        FileFormat::Csv => read_dataset_csv_unchecked(open(path)?),
        FileFormat::Jsonl => {
            let catalog = read_catalog(open(&catalog_path_for(path))?)?;
            read_dataset_jsonl_unchecked(open(path)?, catalog)
        }
    }
}

pub fn load_dataset_jsonl(path: &Path, catalog_path: &Path) -> Result<Dataset> {
    let catalog = read_catalog(open(catalog_path)?)?;
    read_dataset_jsonl(open(path)?, catalog)
}

pub fn read_catalog<R: Read>(reader: R) -> Result<AttributeCatalog> {
    let names: Vec<String> = serde_json::from_reader(reader)?;
    AttributeCatalog::new(names)
}

fn parse_label(cell: &str, line: usize, column: &str) -> Result<u8> {
    match cell {
        "0" => Ok(0),
        "1" => Ok(1),
        other => match other.trim().parse::<f64>() {
            Ok(v) => Err(Error::Content {
                line,
                message: format!("non-binary label {v} in column {column:?}"),
            }),
            Err(_) => Err(Error::Parse {
                line,
                message: format!("cannot read label {other:?} in column {column:?}"),
            }),
        },
    }
}

struct DuplicateGuard {
    seen: HashMap<String, usize>,
}

impl DuplicateGuard {
    fn new() -> Self {
        DuplicateGuard {
            seen: HashMap::new(),
        }
    }

    fn check(&mut self, image_id: &str, line: usize) -> Result<()> {
        if image_id.is_empty() {
            return Err(Error::Content {
                line,
                message: "empty image_id".into(),
            });
        }
        if let Some(first) = self.seen.insert(image_id.to_owned(), line) {
            return Err(Error::Content {
                line,
                message: format!("duplicate id {image_id:?} (first seen on line {first})"),
            });
        }
        Ok(())
    }
}

fn finish(catalog: AttributeCatalog, records: Vec<Record>) -> Result<Dataset> {
    let dataset = Dataset::from_parts(catalog, records);
    let validation = validate_dataset(&dataset);
    if validation.ok {
        Ok(dataset)
    } else {
        Err(Error::InvalidDataset(validation.violations))
    }
}

pub fn read_dataset_csv<R: Read>(reader: R) -> Result<Dataset> {
    read_csv(reader, true)
}

/// Parses a dataset CSV without enforcing dataset invariants, so that
/// [`validate_dataset`] can itemize all of them. Label cells must still be
/// small non-negative integers.
pub fn read_dataset_csv_unchecked<R: Read>(reader: R) -> Result<Dataset> {
    read_csv(reader, false)
}

fn parse_label_unchecked(cell: &str, line: usize, column: &str) -> Result<u8> {
    cell.parse::<u8>().map_err(|_| Error::Parse {
        line,
        message: format!("cannot read label {cell:?} in column {column:?}"),
    })
}

fn read_csv<R: Read>(reader: R, strict: bool) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .clone();

    let mut id_col = None;
    let mut identity_col = None;
    let mut attr_cols = Vec::new();
    let mut names = Vec::new();
    for (col, field) in header.iter().enumerate() {
        match field {
            "image_id" => id_col = Some(col),
            "identity" => identity_col = Some(col),
            f if f.starts_with(ATTR_PREFIX) => {
                attr_cols.push(col);
                names.push(f[ATTR_PREFIX.len()..].to_owned());
            }
            other => {
                return Err(Error::Parse {
                    line: 1,
                    message: format!("unknown attribute column {other:?}"),
                })
            }
        }
    }
    let (id_col, identity_col) = match (id_col, identity_col) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            return Err(Error::Parse {
                line: 1,
                message: "header must contain image_id and identity columns".into(),
            })
        }
    };
    let catalog = AttributeCatalog::new(names).map_err(|e| Error::Parse {
        line: 1,
        message: e.to_string(),
    })?;

    let mut records = Vec::new();
    let mut guard = DuplicateGuard::new();
    for row in rdr.records() {
        let row = row.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        if row.len() != header.len() {
            return Err(Error::Parse {
                line,
                message: format!(
                    "malformed row: {} fields, header has {}",
                    row.len(),
                    header.len()
                ),
            });
        }
        let image_id = &row[id_col];
        if strict {
            guard.check(image_id, line)?;
        }
        let identity = match &row[identity_col] {
            "" => None,
            s => Some(s.to_owned()),
        };
        let labels = attr_cols
            .iter()
            .zip(catalog.names())
            .map(|(&col, name)| {
                if strict {
                    parse_label(&row[col], line, name)
                } else {
                    parse_label_unchecked(&row[col], line, name)
                }
            })
            .collect::<Result<Vec<u8>>>()?;
        records.push(Record {
            image_id: image_id.to_owned(),
            identity,
            labels,
        });
    }
    if strict {
        finish(catalog, records)
    } else {
        Ok(Dataset::from_parts(catalog, records))
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonRecord {
    image_id: String,
    #[serde(default)]
    identity: Option<String>,
    labels: Vec<serde_json::Value>,
}

#[derive(Serialize)]
struct JsonRecordOut<'a> {
    image_id: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    identity: Option<&'a str>,
    labels: &'a [u8],
}

/// Lines are numbered from 1; a blank line is an error rather than a
/// silently skipped row.
fn jsonl_lines<R: Read>(reader: R) -> impl Iterator<Item = Result<(usize, String)>> {
    BufReader::new(reader).lines().enumerate().map(|(i, line)| {
        let n = i + 1;
        let line = line.map_err(|e| Error::Parse {
            line: n,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            return Err(Error::Parse {
                line: n,
                message: "blank line".into(),
            });
        }
        Ok((n, line))
    })
}

pub fn read_dataset_jsonl<R: Read>(reader: R, catalog: AttributeCatalog) -> Result<Dataset> {
    read_jsonl(reader, catalog, true)
}

/// JSONL counterpart of [`read_dataset_csv_unchecked`].
pub fn read_dataset_jsonl_unchecked<R: Read>(
    reader: R,
    catalog: AttributeCatalog,
) -> Result<Dataset> {
    read_jsonl(reader, catalog, false)
}

fn read_jsonl<R: Read>(reader: R, catalog: AttributeCatalog, strict: bool) -> Result<Dataset> {
    let mut records = Vec::new();
    let mut guard = DuplicateGuard::new();
    let m = catalog.len();
    for item in jsonl_lines(reader) {
        let (line, text) = item?;
        let raw: JsonRecord = serde_json::from_str(&text).map_err(|e| Error::Parse {
            line,
            message: format!("malformed row: {e}"),
        })?;
        if !strict {
            let labels = raw
                .labels
                .iter()
                .map(|v| {
                    v.as_u64()
                        .and_then(|x| u8::try_from(x).ok())
                        .ok_or_else(|| Error::Parse {
                            line,
                            message: format!("cannot read label {v}"),
                        })
                })
                .collect::<Result<Vec<u8>>>()?;
            records.push(Record {
                image_id: raw.image_id,
                identity: raw.identity,
                labels,
            });
            continue;
        }
        guard.check(&raw.image_id, line)?;
        if raw.identity.as_deref() == Some("") {
            return Err(Error::Content {
                line,
                message: "empty identity string; omit the key for a missing identity".into(),
            });
        }
        if raw.labels.len() != m {
            return Err(Error::Content {
                line,
                message: format!("label arity: {} labels, catalog has {m}", raw.labels.len()),
            });
        }
        let labels = raw
            .labels
            .iter()
            .zip(catalog.names())
            .map(|(v, name)| match v.as_u64() {
                Some(0) => Ok(0),
                Some(1) => Ok(1),
                _ => Err(Error::Content {
                    line,
                    message: format!("non-binary label {v} for attribute {name:?}"),
                }),
            })
            .collect::<Result<Vec<u8>>>()?;
        records.push(Record {
            image_id: raw.image_id,
            identity: raw.identity,
            labels,
        });
    }
    if strict {
        finish(catalog, records)
    } else {
        Ok(Dataset::from_parts(catalog, records))
    }
}

pub fn write_dataset_csv<W: Write>(dataset: &Dataset, writer: W) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    let mut header = vec!["image_id".to_owned(), "identity".to_owned()];
    header.extend(
        dataset
            .catalog()
            .names()
            .iter()
            .map(|n| format!("{ATTR_PREFIX}{n}")),
    );
    wtr.write_record(&header).map_err(csv_write_error)?;
    for record in dataset.records() {
        let mut row = Vec::with_capacity(header.len());
        row.push(record.image_id.clone());
        row.push(record.identity.clone().unwrap_or_default());
        row.extend(record.labels.iter().map(|l| l.to_string()));
        wtr.write_record(&row).map_err(csv_write_error)?;
    }
    wtr.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn write_dataset_jsonl<W: Write>(dataset: &Dataset, mut writer: W) -> Result<()> {
    for record in dataset.records() {
        let out = JsonRecordOut {
            image_id: &record.image_id,
            identity: record.identity.as_deref(),
            labels: &record.labels,
        };
        serde_json::to_writer(&mut writer, &out)?;
        writer
            .write_all(b"\n")
            .map_err(|e| Error::io("<jsonl>", e))?;
    }
    Ok(())
}

pub fn write_catalog<W: Write>(catalog: &AttributeCatalog, mut writer: W) -> Result<()> {
    serde_json::to_writer(&mut writer, catalog.names())?;
    writer
        .write_all(b"\n")
        .map_err(|e| Error::io("<catalog>", e))?;
    Ok(())
}

/// Writes a dataset; JSONL also writes the side-car catalog next to it.
pub fn save_dataset(dataset: &Dataset, path: &Path, format: FileFormat) -> Result<()> {
    match format {
        FileFormat::Csv => {
            let mut w = create(path)?;
            write_dataset_csv(dataset, &mut w)?;
            w.flush().map_err(|e| Error::io(path, e))
        }
        FileFormat::Jsonl => {
            let mut w = create(path)?;
            write_dataset_jsonl(dataset, &mut w)?;
            w.flush().map_err(|e| Error::io(path, e))?;
            let catalog_path = catalog_path_for(path);
            let mut c = create(&catalog_path)?;
            write_catalog(dataset.catalog(), &mut c)?;
            c.flush().map_err(|e| Error::io(catalog_path, e))
        }
    }
}

fn csv_write_error(e: csv::Error) -> Error {
    Error::io("<csv>", std::io::Error::other(e.to_string()))
}

// ---------------------------------------------------------------------------
// Splits

/// On-disk split: three id lists plus the configuration and report that
/// produced them. Hand-made split files may omit `config` and `report`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<SplitConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<SplitReport>,
    pub train: Vec<String>,
    pub valid: Vec<String>,
    pub test: Vec<String>,
}

impl SplitFile {
    pub fn new(
        dataset: &Dataset,
        assignment: &SplitAssignment,
        config: Option<&SplitConfig>,
        report: Option<&SplitReport>,
    ) -> Result<Self> {
        assignment.check_covers(dataset)?;
        if let Some(empty) = assignment.first_empty_partition() {
            return Err(Error::DegenerateSplit(empty.name()));
        }
        let ids = |p: Partition| -> Vec<String> {
            assignment
                .members(p)
                .map(|i| dataset.records()[i].image_id.clone())
                .collect()
        };
        Ok(SplitFile {
            config: config.cloned(),
            report: report.cloned(),
            train: ids(Partition::Train),
            valid: ids(Partition::Valid),
            test: ids(Partition::Test),
        })
    }

    pub fn ids(&self, partition: Partition) -> &[String] {
        match partition {
            Partition::Train => &self.train,
            Partition::Valid => &self.valid,
            Partition::Test => &self.test,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// Resolves the id lists against `dataset` into a total assignment.
    pub fn assignment(&self, dataset: &Dataset) -> Result<SplitAssignment> {
        let index = dataset.index_by_id();
        let mut slots: Vec<Option<Partition>> = vec![None; dataset.len()];
        for partition in Partition::ALL {
            for id in self.ids(partition) {
                let &i = index
                    .get(id.as_str())
                    .ok_or_else(|| Error::Split(format!("unknown id {id:?}")))?;
                if let Some(prev) = slots[i] {
                    return Err(Error::Split(format!(
                        "duplicate assignment: {id:?} listed in {prev} and {partition}"
                    )));
                }
                slots[i] = Some(partition);
            }
        }
        let missing: Vec<&str> = slots
            .iter()
            .enumerate()
            .filter(|(_, s)| s.is_none())
            .map(|(i, _)| dataset.records()[i].image_id.as_str())
            .collect();
        if !missing.is_empty() {
            return Err(Error::Split(format!(
                "incomplete split: {} dataset ids unassigned (first: {:?})",
                missing.len(),
                missing[0]
            )));
        }
        Ok(SplitAssignment::new(slots.into_iter().flatten().collect()))
    }
}

/// Writes a split file; refuses assignments with an empty partition.
pub fn write_split(
    path: &Path,
    dataset: &Dataset,
    assignment: &SplitAssignment,
    config: Option<&SplitConfig>,
    report: Option<&SplitReport>,
) -> Result<()> {
    let json = SplitFile::new(dataset, assignment, config, report)?.to_json()?;
    std::fs::write(path, json).map_err(|e| Error::io(path, e))
}

pub fn read_split_file<R: Read>(reader: R) -> Result<SplitFile> {
    Ok(serde_json::from_reader(reader)?)
}

pub fn load_split_file(path: &Path) -> Result<SplitFile> {
    read_split_file(open(path)?)
}

pub fn load_split(path: &Path, dataset: &Dataset) -> Result<SplitAssignment> {
    load_split_file(path)?.assignment(dataset)
}

// ---------------------------------------------------------------------------
// Predictions

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreKind {
    Probs,
    Logits,
}

impl std::str::FromStr for ScoreKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "probs" => Ok(ScoreKind::Probs),
            "logits" => Ok(ScoreKind::Logits),
            other => Err(Error::Domain(format!("unknown score kind {other:?}"))),
        }
    }
}

/// Per-image real-valued scores, one per attribute, in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    kind: ScoreKind,
    threshold: f64,
    image_ids: Vec<String>,
    scores: Vec<Vec<f64>>,
    index: HashMap<String, usize>,
}

impl PredictionSet {
    pub const DEFAULT_THRESHOLD: f64 = 0.5;

    /// Builds a prediction set and checks it against `dataset`.
    pub fn new(dataset: &Dataset, kind: ScoreKind, rows: Vec<(String, Vec<f64>)>) -> Result<Self> {
        let known: HashSet<&str> = dataset
            .records()
            .iter()
            .map(|r| r.image_id.as_str())
            .collect();
        let m = dataset.attribute_count();
        let mut set = PredictionSet {
            kind,
            threshold: Self::DEFAULT_THRESHOLD,
            image_ids: Vec::with_capacity(rows.len()),
            scores: Vec::with_capacity(rows.len()),
            index: HashMap::with_capacity(rows.len()),
        };
        for (row, (id, values)) in rows.into_iter().enumerate() {
            let err = |msg: String| Error::Predictions(format!("row {}: {msg}", row + 1));
            if !known.contains(id.as_str()) {
                return Err(err(format!("unknown id {id:?}")));
            }
            if values.len() != m {
                return Err(err(format!(
                    "arity mismatch: {} scores, catalog has {m}",
                    values.len()
                )));
            }
            check_scores(kind, &values).map_err(err)?;
            if set.index.insert(id.clone(), set.image_ids.len()).is_some() {
                return Err(err(format!("duplicate id {id:?}")));
            }
            set.image_ids.push(id);
            set.scores.push(values);
        }
        Ok(set)
    }

    pub fn with_threshold(mut self, threshold: f64) -> Result<Self> {
        if !threshold.is_finite() {
            return Err(Error::Domain(format!(
                "threshold must be finite, got {threshold}"
            )));
        }
        self.threshold = threshold;
        Ok(self)
    }

    pub fn kind(&self) -> ScoreKind {
        self.kind
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn len(&self) -> usize {
        self.image_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.image_ids.is_empty()
    }

    pub fn image_ids(&self) -> &[String] {
        &self.image_ids
    }

    pub fn scores_for(&self, image_id: &str) -> Option<&[f64]> {
        self.index.get(image_id).map(|&i| self.scores[i].as_slice())
    }

    pub fn rows(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.image_ids
            .iter()
            .map(String::as_str)
            .zip(self.scores.iter().map(Vec::as_slice))
    }
}

fn check_scores(kind: ScoreKind, values: &[f64]) -> std::result::Result<(), String> {
    for &v in values {
        if v.is_nan() {
            return Err("NaN score".into());
        }
        if kind == ScoreKind::Probs && !(0.0..=1.0).contains(&v) {
            return Err(format!("probability range: {v} is outside [0,1]"));
        }
    }
    Ok(())
}

pub fn load_predictions(path: &Path, dataset: &Dataset, kind: ScoreKind) -> Result<PredictionSet> {
    match FileFormat::from_path(path) {
        FileFormat::Csv => read_predictions_csv(open(path)?, dataset, kind),
        FileFormat::Jsonl => read_predictions_jsonl(open(path)?, dataset, kind),
    }
}

/// Reads `image_id,<attr names...>`; columns may appear in any order but
/// must name every catalog attribute exactly once.
pub fn read_predictions_csv<R: Read>(
    reader: R,
    dataset: &Dataset,
    kind: ScoreKind,
) -> Result<PredictionSet> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let catalog = dataset.catalog();
    if header.get(0) != Some("image_id") {
        return Err(Error::Parse {
            line: 1,
            message: "first column must be image_id".into(),
        });
    }
    let mut target = Vec::with_capacity(catalog.len());
    let mut seen = HashSet::new();
    for name in header.iter().skip(1) {
        let name = name.strip_prefix(ATTR_PREFIX).unwrap_or(name);
        let j = catalog.index_of(name).ok_or_else(|| Error::Parse {
            line: 1,
            message: format!("unknown attribute column {name:?}"),
        })?;
        if !seen.insert(j) {
            return Err(Error::Parse {
                line: 1,
                message: format!("attribute column {name:?} repeated"),
            });
        }
        target.push(j);
    }
    if target.len() != catalog.len() {
        return Err(Error::Predictions(format!(
            "arity mismatch: header has {} attributes, catalog has {}",
            target.len(),
            catalog.len()
        )));
    }

    let mut rows = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        if row.len() != header.len() {
            return Err(Error::Predictions(format!(
                "line {line}: arity mismatch: {} fields, header has {}",
                row.len(),
                header.len()
            )));
        }
        let mut values = vec![0.0; catalog.len()];
        for (cell, &j) in row.iter().skip(1).zip(&target) {
            values[j] = cell.trim().parse::<f64>().map_err(|_| Error::Parse {
                line,
                message: format!("cannot read score {cell:?}"),
            })?;
        }
        rows.push((row[0].to_owned(), values));
    }
    PredictionSet::new(dataset, kind, rows)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonPrediction {
    image_id: String,
    scores: Vec<f64>,
}

pub fn read_predictions_jsonl<R: Read>(
    reader: R,
    dataset: &Dataset,
    kind: ScoreKind,
) -> Result<PredictionSet> {
    let mut rows = Vec::new();
    for item in jsonl_lines(reader) {
        let (line, text) = item?;
        let p: JsonPrediction = serde_json::from_str(&text).map_err(|e| Error::Parse {
            line,
            message: format!("malformed row: {e}"),
        })?;
        rows.push((p.image_id, p.scores));
    }
    PredictionSet::new(dataset, kind, rows)
}

pub fn write_predictions_csv<W: Write>(
    predictions: &PredictionSet,
    catalog: &AttributeCatalog,
    writer: W,
) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    let mut header = vec!["image_id".to_owned()];
    header.extend(catalog.names().iter().cloned());
    wtr.write_record(&header).map_err(csv_write_error)?;
    for (id, scores) in predictions.rows() {
        let mut row = vec![id.to_owned()];
        row.extend(scores.iter().map(|v| v.to_string()));
        wtr.write_record(&row).map_err(csv_write_error)?;
    }
    wtr.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}
