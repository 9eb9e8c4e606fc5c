//! Answer-analysis score, final mark, and the end-to-end grading pipeline.

mod report;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::frequency::{FrequencyError, FrequencyTable, build_frequency, weight_table};
use crate::linguistic::{
    self, GrammarBackend, LinguisticAnalysis, LinguisticError, SpellingDictionary,
};
use crate::preprocess::{PreprocessConfig, preprocess};
use crate::sources::{Question, ReferenceAnswer, SourceKind};

pub use report::{RECORD_HEADER, record_line, render_report};

const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScoringError {
    #[error("student answer has no scorable words")]
    EmptyStudentAnswer,
    #[error("reference answer has no scorable words")]
    EmptyReference,
    #[error("invalid weights {frequency} + {linguistic}: each must be in [0, 1] and they must sum to 1")]
    InvalidWeights { frequency: f64, linguistic: f64 },
    #[error("{name} = {value} is out of range")]
    OutOfRange { name: &'static str, value: f64 },
}

impl From<FrequencyError> for ScoringError {
    fn from(_: FrequencyError) -> Self {
        ScoringError::EmptyReference
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreWeights {
    frequency: f64,
    linguistic: f64,
}

impl ScoreWeights {
    pub fn new(frequency: f64, linguistic: f64) -> Result<Self, ScoringError> {
        let unit = |w: f64| (0.0..=1.0).contains(&w);
        if !unit(frequency) || !unit(linguistic) || ((frequency + linguistic) - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(ScoringError::InvalidWeights { frequency, linguistic });
        }
        Ok(Self { frequency, linguistic })
    }

    pub fn frequency(&self) -> f64 {
        self.frequency
    }

    pub fn linguistic(&self) -> f64 {
        self.linguistic
    }
}

impl Default for ScoreWeights {
    /// 70% word frequency, 30% linguistic.
    fn default() -> Self {
        Self {
            frequency: 0.7,
            linguistic: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchedWord {
    pub word: String,
    pub student_count: u64,
    pub reference_count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MissingWord {
    pub word: String,
    pub reference_count: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonResult {
    /// The accumulator exactly as the comparison computes it; unbounded.
    pub aa_raw: f64,
    /// `aa_raw` clamped to `[0, 100]`.
    pub aa_score: f64,
    pub matched: Vec<MatchedWord>,
    pub missing: Vec<MissingWord>,
}

/// Scores a student frequency table against a reference table.
///
/// Runs four passes over a private copy of the reference:
///
/// 1. weight every reference word as its share of the reference total, in percent;
/// 2. for each student word the reference knows, add `weight / #weighted words`;
/// 3. for each such word add `student/reference · 100 + student / #student words`,
///    then zero the copy's count;
/// 4. for each reference word still nonzero subtract `count / #student words · 100`.
///
/// Matched words are credited in both pass 2 and pass 3, and the ratio in
/// pass 3 is not capped; the clamp to `[0, 100]` absorbs the overshoot.
pub fn compare_frequencies(
    student: &FrequencyTable,
    reference: &FrequencyTable,
) -> Result<ComparisonResult, ScoringError> {
    if reference.total_count() == 0 {
        return Err(ScoringError::EmptyReference);
    }
    if student.distinct_count() == 0 {
        return Err(ScoringError::EmptyStudentAnswer);
    }

    let weights = weight_table(reference)?;
    let weighted_words = weights.len() as f64;
    let student_words = student.distinct_count() as f64;
    let mut remaining: BTreeMap<&str, u64> = reference.iter().collect();
    let mut aa_raw = 0.0;

    for (word, _) in student.iter() {
        if let Some(weight) = weights.get(word) {
            aa_raw += weight / weighted_words;
        }
    }

    let mut matched = Vec::new();
    for (word, student_count) in student.iter() {
        if let Some(reference_count) = remaining.get_mut(word) {
            let s = student_count as f64;
            aa_raw += s / *reference_count as f64 * 100.0 + s / student_words;
            matched.push(MatchedWord {
                word: word.to_owned(),
                student_count,
                reference_count: *reference_count,
            });
            *reference_count = 0;
        }
    }

    let mut missing = Vec::new();
    for (word, count) in remaining.iter_mut() {
        if *count != 0 {
            aa_raw -= *count as f64 / student_words * 100.0;
            missing.push(MissingWord {
                word: (*word).to_owned(),
                reference_count: *count,
            });
            *count = 0;
        }
    }

    Ok(ComparisonResult {
        aa_raw,
        aa_score: aa_raw.clamp(0.0, 100.0),
        matched,
        missing,
    })
}

fn check_range(name: &'static str, value: f64, max: f64) -> Result<(), ScoringError> {
    if value.is_finite() && (0.0..=max).contains(&value) {
        Ok(())
    } else {
        Err(ScoringError::OutOfRange { name, value })
    }
}

/// `total·w_f·aa/100 + total·w_l·la/100`, bounded to `[0, total]`.
pub fn final_score(
    total_mark: f64,
    aa_score: f64,
    la_score: f64,
    weights: &ScoreWeights,
) -> Result<f64, ScoringError> {
    if !(total_mark.is_finite() && total_mark > 0.0) {
        return Err(ScoringError::OutOfRange {
            name: "total_mark",
            value: total_mark,
        });
    }
    check_range("aa_score", aa_score, 100.0)?;
    check_range("la_score", la_score, 100.0)?;
    let score = total_mark * weights.frequency * (aa_score / 100.0)
        + total_mark * weights.linguistic * (la_score / 100.0);
    Ok(score.clamp(0.0, total_mark))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceProvenance {
    pub source: SourceKind,
    pub detail: String,
}

/// Every number that went into a final mark.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreBreakdown {
    pub question_id: String,
    pub aa_raw: f64,
    pub aa_score: f64,
    pub la_score: f64,
    pub weights: ScoreWeights,
    pub total_mark: f64,
    pub final_score: f64,
    pub reference: Option<ReferenceProvenance>,
    /// `None` for a blank script.
    pub comparison: Option<ComparisonResult>,
    /// `None` for a blank script.
    pub linguistic: Option<LinguisticAnalysis>,
}

impl ScoreBreakdown {
    pub fn new(
        question_id: impl Into<String>,
        aa_raw: f64,
        aa_score: f64,
        la_score: f64,
        weights: ScoreWeights,
        total_mark: f64,
    ) -> Result<Self, ScoringError> {
        let final_score = final_score(total_mark, aa_score, la_score, &weights)?;
        Ok(Self {
            question_id: question_id.into(),
            aa_raw,
            aa_score,
            la_score,
            weights,
            total_mark,
            final_score,
            reference: None,
            comparison: None,
            linguistic: None,
        })
    }

    pub fn is_blank(&self) -> bool {
        self.comparison.is_none()
    }
}

#[derive(Debug, Error)]
pub enum GradeError {
    #[error(transparent)]
    Scoring(#[from] ScoringError),
    #[error(transparent)]
    Linguistic(#[from] LinguisticError),
}

/// Everything needed to grade answers against references.
#[derive(Debug)]
pub struct Grader {
    pub preprocess: PreprocessConfig,
    pub weights: ScoreWeights,
    pub dictionary: SpellingDictionary,
    pub grammar: GrammarBackend,
}

impl Default for Grader {
    fn default() -> Self {
        Self {
            preprocess: PreprocessConfig::default(),
            weights: ScoreWeights::default(),
            dictionary: SpellingDictionary::bundled(),
            grammar: GrammarBackend::default(),
        }
    }
}

impl Grader {
    pub fn grade(
        &self,
        student_text: &str,
        reference: &ReferenceAnswer,
        question: &Question,
    ) -> Result<ScoreBreakdown, GradeError> {
        grade(student_text, reference, question, self)
    }
}

/// Preprocesses both texts, compares their frequency tables, runs the
/// linguistic pass over the raw student text and combines the two scores.
/// A student answer with no scorable words earns zero across the board.
pub fn grade(
    student_text: &str,
    reference: &ReferenceAnswer,
    question: &Question,
    grader: &Grader,
) -> Result<ScoreBreakdown, GradeError> {
    let reference_table = build_frequency(preprocess(&reference.text, &grader.preprocess));
    if reference_table.total_count() == 0 {
        return Err(ScoringError::EmptyReference.into());
    }
    let student_table = build_frequency(preprocess(student_text, &grader.preprocess));
    let provenance = ReferenceProvenance {
        source: reference.source,
        detail: reference.source_detail.clone(),
    };

    let comparison = match compare_frequencies(&student_table, &reference_table) {
        Ok(c) => c,
        Err(ScoringError::EmptyStudentAnswer) => {
            let mut blank = ScoreBreakdown::new(&question.id, 0.0, 0.0, 0.0, grader.weights, question.total_mark)?;
            blank.reference = Some(provenance);
            return Ok(blank);
        }
        Err(e) => return Err(e.into()),
    };

    let analysis = match linguistic::analyze(student_text, &grader.dictionary, &grader.grammar, &grader.preprocess) {
        Ok(a) => Some(a),
        Err(LinguisticError::EmptyAnswer) => None,
        Err(e) => return Err(e.into()),
    };
    let la_score = analysis.as_ref().map_or(0.0, |a| a.report.la_score);

    let mut breakdown = ScoreBreakdown::new(
        &question.id,
        comparison.aa_raw,
        comparison.aa_score,
        la_score,
        grader.weights,
        question.total_mark,
    )?;
    breakdown.reference = Some(provenance);
    breakdown.comparison = Some(comparison);
    breakdown.linguistic = analysis;
    Ok(breakdown)
}
