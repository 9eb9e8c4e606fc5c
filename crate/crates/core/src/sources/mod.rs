//! Where reference answers come from: keyword extraction, the MediaWiki
//! client with its cache, the closed-domain store, and the resolver that
//! chooses between them.

mod cache;
mod keywords;
mod mediawiki;
mod store;

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io;
use std::path::Path;
use std::str::FromStr;
use std::time::SystemTime;

use thiserror::Error;

use crate::preprocess::PreprocessConfig;

pub use cache::{CachedExtract, ExtractCache, cache_key};
pub use keywords::{KeywordSet, QUESTION_WORDS, extract_keywords};
pub use mediawiki::{
    DEFAULT_ENDPOINT, DEFAULT_MIN_INTERVAL, FetchOutcome, MediaWikiClient, fetch_open_domain,
};
pub use store::{MANIFEST_FILE, ManifestEntry, ModelAnswerStore};

#[derive(Debug, Error)]
pub enum SourceError {
    #[error("invalid question: {0}")]
    InvalidQuestion(String),
    #[error("no keywords left in question {0:?}")]
    UnextractableQuestion(String),
    #[error("no page found for {0:?}")]
    NoPageFound(String),
    #[error("network error: {0}")]
    Network(String),
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("unknown question {0:?}")]
    UnknownQuestion(String),
    #[error("corrupt model answer store: {0}")]
    CorruptStore(String),
    #[error("question {0:?} already stored (use overwrite to replace it)")]
    DuplicateQuestion(String),
    #[error("{0}")]
    NotConfigured(String),
    #[error("cache error: {0}")]
    Cache(#[source] io::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Question {
    pub id: String,
    pub text: String,
    /// Maximum attainable score.
    pub total_mark: f64,
}

impl Question {
    pub fn new(id: impl Into<String>, text: impl Into<String>, total_mark: f64) -> Result<Self, SourceError> {
        let (id, text) = (id.into(), text.into());
        if id.is_empty() {
            return Err(SourceError::InvalidQuestion("empty id".into()));
        }
        if text.trim().is_empty() {
            return Err(SourceError::InvalidQuestion(format!("{id}: empty text")));
        }
        if !(total_mark.is_finite() && total_mark > 0.0) {
            return Err(SourceError::InvalidQuestion(format!("{id}: total mark must be positive")));
        }
        Ok(Self { id, text, total_mark })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceKind {
    OpenDomain,
    ClosedDomain,
}

impl fmt::Display for SourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SourceKind::OpenDomain => "open-domain",
            SourceKind::ClosedDomain => "closed-domain",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceAnswer {
    pub text: String,
    pub source: SourceKind,
    /// Resolved page title for open-domain answers, the question id for
    /// closed-domain ones.
    pub source_detail: String,
    pub fetched_at: SystemTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReferenceMode {
    Open,
    Closed,
    #[default]
    ClosedThenOpen,
}

impl FromStr for ReferenceMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "open" => Ok(ReferenceMode::Open),
            "closed" => Ok(ReferenceMode::Closed),
            "closed-then-open" => Ok(ReferenceMode::ClosedThenOpen),
            other => Err(format!("unknown reference mode {other:?} (expected open, closed or closed-then-open)")),
        }
    }
}

impl fmt::Display for ReferenceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReferenceMode::Open => "open",
            ReferenceMode::Closed => "closed",
            ReferenceMode::ClosedThenOpen => "closed-then-open",
        })
    }
}

/// Produces the reference answer for a question according to `mode`.
/// `closed-then-open` falls back to the open domain only when the store
/// does not know the question.
pub fn resolve_reference(
    question: &Question,
    mode: ReferenceMode,
    store: Option<&ModelAnswerStore>,
    client: Option<&MediaWikiClient>,
    config: &PreprocessConfig,
) -> Result<ReferenceAnswer, SourceError> {
    let open = || {
        let client = client.ok_or_else(|| SourceError::NotConfigured("no open-domain endpoint configured".into()))?;
        let keywords = extract_keywords(question, config)?;
        client.fetch(&keywords)
    };
    let closed = || {
        store
            .ok_or_else(|| SourceError::UnknownQuestion(question.id.clone()))?
            .lookup(&question.id)
    };
    let reference = match mode {
        ReferenceMode::Open => open()?,
        ReferenceMode::Closed => closed()?,
        ReferenceMode::ClosedThenOpen => match closed() {
            Err(SourceError::UnknownQuestion(_)) => open()?,
            other => other?,
        },
    };
    if reference.text.trim().is_empty() {
        return Err(SourceError::CorruptStore(format!("{}: empty reference text", question.id)));
    }
    Ok(reference)
}

/// Question texts and marks, loaded from `question_id<TAB>total_mark<TAB>text`
/// lines.
#[derive(Debug, Clone, Default)]
pub struct QuestionBank {
    questions: BTreeMap<String, Question>,
}

impl QuestionBank {
    pub fn parse(body: &str) -> Result<Self, SourceError> {
        let mut questions = BTreeMap::new();
        for (idx, line) in body.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |why: &str| SourceError::InvalidQuestion(format!("questions line {}: {why}", idx + 1));
            let mut fields = line.splitn(3, '\t');
            let (Some(id), Some(mark), Some(text)) = (fields.next(), fields.next(), fields.next()) else {
                return Err(bad("expected question_id<TAB>total_mark<TAB>text"));
            };
            let mark: f64 = mark.trim().parse().map_err(|_| bad("invalid total_mark"))?;
            let q = Question::new(id, text, mark)?;
            if questions.insert(q.id.clone(), q).is_some() {
                return Err(bad("duplicate question id"));
            }
        }
        Ok(Self { questions })
    }

    pub fn load(path: &Path) -> Result<Self, SourceError> {
        let body = fs::read_to_string(path).map_err(|source| SourceError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&body)
    }

    pub fn get(&self, id: &str) -> Option<&Question> {
        self.questions.get(id)
    }

    pub fn insert(&mut self, question: Question) {
        self.questions.insert(question.id.clone(), question);
    }
}

/// Finds a question by id: the bank first, then the store manifest (whose
/// entries carry a mark but no question text, so the id stands in for it).
pub fn find_question(
    id: &str,
    bank: Option<&QuestionBank>,
    store: Option<&ModelAnswerStore>,
) -> Result<Question, SourceError> {
    if let Some(q) = bank.and_then(|b| b.get(id)) {
        return Ok(q.clone());
    }
    if let Some(entry) = store.and_then(|s| s.entry(id)) {
        return Question::new(id, id, entry.total_mark);
    }
    Err(SourceError::UnknownQuestion(id.to_owned()))
}
