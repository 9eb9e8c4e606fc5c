//! Batch grading of a corpus of answer scripts and agreement metrics against
//! human marks.

use std::collections::{BTreeMap, HashSet};
use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::scoring::{Grader, ScoreBreakdown};
use crate::sources::{Question, ReferenceAnswer, SourceError};

pub const CORPUS_HEADER: [&str; 4] = ["question_id", "student_id", "answer_path", "human_score"];
pub const BATCH_HEADER: &str = "question_id,student_id,aa_raw,aa_score,la_score,final_score,total_mark";
pub const FAILURE_HEADER: &str = "question_id,student_id,stage,reason";
pub const METRICS_HEADER: &str = "precision,recall,f_score,threshold,tp,fp,fn,tn";
pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("corpus line {line}: {reason}")]
    CorpusParse { line: u64, reason: String },
    #[error("no entry in the batch could be graded ({} failures)", failures.len())]
    EmptyBatch { failures: Vec<FailureRecord> },
    #[error("system scores and human scores do not align: {0}")]
    CorpusMismatch(String),
    #[error("threshold {0} is outside [0, 1]")]
    InvalidThreshold(f64),
    #[error("could not start {workers} grading workers: {reason}")]
    WorkerPool { workers: usize, reason: String },
}

/// The answer text of one corpus entry. Files that cannot be read are kept
/// so the batch can report them instead of refusing the whole corpus.
#[derive(Debug, Clone, PartialEq)]
pub enum Answer {
    Text(String),
    Unreadable { path: PathBuf, reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusEntry {
    pub question_id: String,
    pub student_id: String,
    pub answer: Answer,
    /// One mark per teacher; empty when the script was not marked by hand.
    pub human_scores: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GradedCorpus {
    entries: Vec<CorpusEntry>,
}

impl GradedCorpus {
    /// Rejects repeated `(question_id, student_id)` pairs and negative or
    /// non-finite human marks. Upper bounds depend on the question and are
    /// checked by [`compute_metrics`].
    pub fn new(entries: Vec<CorpusEntry>) -> Result<Self, HarnessError> {
        let mut seen = HashSet::new();
        for (idx, e) in entries.iter().enumerate() {
            let line = idx as u64 + 2;
            if !seen.insert((e.question_id.as_str(), e.student_id.as_str())) {
                return Err(HarnessError::CorpusParse {
                    line,
                    reason: format!("duplicate entry ({}, {})", e.question_id, e.student_id),
                });
            }
            if let Some(bad) = e.human_scores.iter().find(|s| !s.is_finite() || **s < 0.0) {
                return Err(HarnessError::CorpusParse {
                    line,
                    reason: format!("human score {bad} is negative or not a number"),
                });
            }
        }
        Ok(Self { entries })
    }

    /// Parses the CSV body. Relative answer paths are resolved against
    /// `base_dir`, normally the directory holding the corpus file.
    pub fn parse(body: &str, base_dir: &Path) -> Result<Self, HarnessError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(body.as_bytes());
        let header = reader.headers().map_err(|e| HarnessError::CorpusParse {
            line: 1,
            reason: e.to_string(),
        })?;
        if header.iter().ne(CORPUS_HEADER) {
            return Err(HarnessError::CorpusParse {
                line: 1,
                reason: format!("expected header {}", CORPUS_HEADER.join(",")),
            });
        }

        let mut entries = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| HarnessError::CorpusParse {
                line: e.position().map_or(0, |p| p.line()),
                reason: e.to_string(),
            })?;
            let line = record.position().map_or(0, |p| p.line());
            let bad = |reason: String| HarnessError::CorpusParse { line, reason };
            let (question_id, student_id, answer_path) = (&record[0], &record[1], &record[2]);
            if question_id.is_empty() || student_id.is_empty() || answer_path.is_empty() {
                return Err(bad("question_id, student_id and answer_path are required".into()));
            }
            let human_scores = parse_human_scores(&record[3]).map_err(bad)?;
            let path = base_dir.join(answer_path);
            let answer = match fs::read_to_string(&path) {
                Ok(text) => Answer::Text(text),
                Err(e) => Answer::Unreadable {
                    path,
                    reason: e.to_string(),
                },
            };
            entries.push(CorpusEntry {
                question_id: question_id.to_owned(),
                student_id: student_id.to_owned(),
                answer,
                human_scores,
            });
        }
        Self::new(entries)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let body = fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&body, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn entries(&self) -> &[CorpusEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn has_human_scores(&self) -> bool {
        self.entries.iter().any(|e| !e.human_scores.is_empty())
    }
}

fn parse_human_scores(field: &str) -> Result<Vec<f64>, String> {
    if field.is_empty() {
        return Ok(Vec::new());
    }
    field
        .split(';')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| format!("human score {s:?} is not a number"))
        })
        .collect()
}

/// How several teachers' marks for one script become one number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HumanAggregate {
    #[default]
    Mean,
    Median,
}

impl HumanAggregate {
    /// `None` for an empty slice.
    pub fn apply(self, scores: &[f64]) -> Option<f64> {
        if scores.is_empty() {
            return None;
        }
        match self {
            HumanAggregate::Mean => Some(scores.iter().sum::<f64>() / scores.len() as f64),
            HumanAggregate::Median => {
                let mut sorted = scores.to_vec();
                sorted.sort_by(f64::total_cmp);
                let mid = sorted.len() / 2;
                Some(if sorted.len().is_multiple_of(2) {
                    (sorted[mid - 1] + sorted[mid]) / 2.0
                } else {
                    sorted[mid]
                })
            }
        }
    }
}

impl FromStr for HumanAggregate {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mean" => Ok(HumanAggregate::Mean),
            "median" => Ok(HumanAggregate::Median),
            other => Err(format!("unknown aggregate {other:?} (expected mean or median)")),
        }
    }
}

impl fmt::Display for HumanAggregate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HumanAggregate::Mean => "mean",
            HumanAggregate::Median => "median",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureStage {
    Input,
    Question,
    Reference,
    Grading,
}

impl fmt::Display for FailureStage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FailureStage::Input => "input",
            FailureStage::Question => "question",
            FailureStage::Reference => "reference",
            FailureStage::Grading => "grading",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FailureRecord {
    pub question_id: String,
    pub student_id: String,
    pub stage: FailureStage,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchItem {
    pub student_id: String,
    pub breakdown: ScoreBreakdown,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchOutcome {
    /// In corpus order.
    pub scored: Vec<BatchItem>,
    pub failures: Vec<FailureRecord>,
}

type Resolved = Result<(Question, ReferenceAnswer), (FailureStage, String)>;

/// Grades every corpus entry.
///
/// Questions and references are resolved once per distinct question id, in
/// corpus order and on the calling thread, so remote lookups stay sequential
/// and hit the cache on repeats. Grading then runs on `workers` threads.
/// Entries that fail at any stage are recorded and skipped.
pub fn evaluate_batch<Q, R>(
    corpus: &GradedCorpus,
    grader: &Grader,
    find_question: Q,
    resolve: R,
    workers: usize,
) -> Result<BatchOutcome, HarnessError>
where
    Q: Fn(&str) -> Result<Question, SourceError>,
    R: Fn(&Question) -> Result<ReferenceAnswer, SourceError>,
{
    let mut resolved: BTreeMap<&str, Resolved> = BTreeMap::new();
    for entry in corpus.entries() {
        resolved.entry(entry.question_id.as_str()).or_insert_with(|| {
            let q = find_question(&entry.question_id).map_err(|e| (FailureStage::Question, e.to_string()))?;
            let r = resolve(&q).map_err(|e| (FailureStage::Reference, e.to_string()))?;
            Ok((q, r))
        });
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| HarnessError::WorkerPool {
            workers,
            reason: e.to_string(),
        })?;
    let results: Vec<Result<BatchItem, FailureRecord>> = pool.install(|| {
        corpus
            .entries()
            .par_iter()
            .map(|entry| {
                let fail = |stage, reason: String| FailureRecord {
                    question_id: entry.question_id.clone(),
                    student_id: entry.student_id.clone(),
                    stage,
                    reason,
                };
                let text = match &entry.answer {
                    Answer::Text(t) => t,
                    Answer::Unreadable { path, reason } => {
                        return Err(fail(FailureStage::Input, format!("{}: {reason}", path.display())));
                    }
                };
                let (question, reference) = match &resolved[entry.question_id.as_str()] {
                    Ok(pair) => pair,
                    Err((stage, reason)) => return Err(fail(*stage, reason.clone())),
                };
                grader
                    .grade(text, reference, question)
                    .map(|breakdown| BatchItem {
                        student_id: entry.student_id.clone(),
                        breakdown,
                    })
                    .map_err(|e| fail(FailureStage::Grading, e.to_string()))
            })
            .collect()
    });

    let mut outcome = BatchOutcome {
        scored: Vec::new(),
        failures: Vec::new(),
    };
    for r in results {
        match r {
            Ok(item) => outcome.scored.push(item),
            Err(f) => outcome.failures.push(f),
        }
    }
    if outcome.scored.is_empty() {
        return Err(HarnessError::EmptyBatch {
            failures: outcome.failures,
        });
    }
    Ok(outcome)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl Confusion {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

/// Precision, recall and F-score of system pass/fail decisions against
/// human ones. An undefined metric is reported as 0 with its flag cleared.
///
/// F is the harmonic mean `2PR / (P + R)`. For P = 0.91 and R = 0.81 that is
/// about 0.857; a figure of 0.87 for that pair does not follow from it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
    pub threshold: f64,
    pub confusion: Confusion,
    pub precision_defined: bool,
    pub recall_defined: bool,
    pub f_score_defined: bool,
}

impl MetricsReport {
    pub fn from_confusion(confusion: Confusion, threshold: f64) -> Self {
        let Confusion { tp, fp, fn_, .. } = confusion;
        let ratio = |num: u64, den: u64| (den > 0).then(|| num as f64 / den as f64);
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f_score = match (precision, recall) {
            (Some(p), Some(r)) if p > 0.0 && r > 0.0 => Some(2.0 * p * r / (p + r)),
            _ => None,
        };
        Self {
            precision: precision.unwrap_or(0.0),
            recall: recall.unwrap_or(0.0),
            f_score: f_score.unwrap_or(0.0),
            threshold,
            confusion,
            precision_defined: precision.is_some(),
            recall_defined: recall.is_some(),
            f_score_defined: f_score.is_some(),
        }
    }
}

/// Binarizes both sides at `threshold · total_mark` and counts agreement.
///
/// Every system item must have a corpus entry with at least one human mark.
/// Corpus entries without a system score (failed in the batch) are skipped.
pub fn compute_metrics(
    system: &[BatchItem],
    human: &GradedCorpus,
    threshold: f64,
    aggregate: HumanAggregate,
) -> Result<MetricsReport, HarnessError> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(HarnessError::InvalidThreshold(threshold));
    }
    let by_key: BTreeMap<(&str, &str), &CorpusEntry> = human
        .entries()
        .iter()
        .map(|e| ((e.question_id.as_str(), e.student_id.as_str()), e))
        .collect();

    let mut seen = HashSet::new();
    let mut confusion = Confusion::default();
    for item in system {
        let b = &item.breakdown;
        let key = (b.question_id.as_str(), item.student_id.as_str());
        if !seen.insert(key) {
            return Err(HarnessError::CorpusMismatch(format!("({}, {}) scored twice", key.0, key.1)));
        }
        let entry = by_key
            .get(&key)
            .ok_or_else(|| HarnessError::CorpusMismatch(format!("({}, {}) is not in the corpus", key.0, key.1)))?;
        let human_score = aggregate
            .apply(&entry.human_scores)
            .ok_or_else(|| HarnessError::CorpusMismatch(format!("({}, {}) has no human score", key.0, key.1)))?;
        if human_score > b.total_mark {
            return Err(HarnessError::CorpusMismatch(format!(
                "({}, {}) human score {human_score} exceeds total mark {}",
                key.0, key.1, b.total_mark
            )));
        }
        let system_positive = b.final_score / b.total_mark >= threshold;
        let human_positive = human_score / b.total_mark >= threshold;
        match (system_positive, human_positive) {
            (true, true) => confusion.tp += 1,
            (true, false) => confusion.fp += 1,
            (false, true) => confusion.fn_ += 1,
            (false, false) => confusion.tn += 1,
        }
    }
    Ok(MetricsReport::from_confusion(confusion, threshold))
}

fn csv_line<const N: usize>(fields: [String; N]) -> String {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(fields).expect("writing to memory");
    let bytes = w.into_inner().expect("flushing to memory");
    String::from_utf8(bytes).expect("csv output is utf-8")
}

/// Header plus one row per scored entry.
pub fn render_batch(items: &[BatchItem]) -> String {
    let mut out = format!("{BATCH_HEADER}\n");
    for item in items {
        let b = &item.breakdown;
        out.push_str(&csv_line([
            b.question_id.clone(),
            item.student_id.clone(),
            format!("{:.2}", b.aa_raw),
            format!("{:.2}", b.aa_score),
            format!("{:.2}", b.la_score),
            format!("{:.2}", b.final_score),
            format!("{:.2}", b.total_mark),
        ]));
    }
    out
}

pub fn render_failures(failures: &[FailureRecord]) -> String {
    let mut out = format!("{FAILURE_HEADER}\n");
    for f in failures {
        out.push_str(&csv_line([
            f.question_id.clone(),
            f.student_id.clone(),
            f.stage.to_string(),
            f.reason.clone(),
        ]));
    }
    out
}

/// A small table followed by the machine-readable record.
pub fn render_metrics(m: &MetricsReport) -> String {
    let show = |v: f64, defined: bool| {
        if defined {
            format!("{v:.4}")
        } else {
            format!("{v:.4} (undefined)")
        }
    };
    let c = m.confusion;
    let mut out = String::new();
    let _ = writeln!(out, "threshold:  {:.2} of total mark", m.threshold);
    let _ = writeln!(out, "             human+  human-");
    let _ = writeln!(out, "  system+   {:>6}  {:>6}", c.tp, c.fp);
    let _ = writeln!(out, "  system-   {:>6}  {:>6}", c.fn_, c.tn);
    let _ = writeln!(out, "precision:  {}", show(m.precision, m.precision_defined));
    let _ = writeln!(out, "recall:     {}", show(m.recall, m.recall_defined));
    let _ = writeln!(out, "f-score:    {}", show(m.f_score, m.f_score_defined));
    let _ = writeln!(out);
    let _ = writeln!(out, "{METRICS_HEADER}");
    out.push_str(&csv_line([
        m.precision.to_string(),
        m.recall.to_string(),
        m.f_score.to_string(),
        m.threshold.to_string(),
        c.tp.to_string(),
        c.fp.to_string(),
        c.fn_.to_string(),
        c.tn.to_string(),
    ]));
    out
}
