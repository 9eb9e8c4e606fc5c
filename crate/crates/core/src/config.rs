//! Run configuration: an INI-style file of `key = value` lines grouped under
//! section headers, where every key can be overridden by a command-line flag
//! of the same name.
//!
//! ```ini
//! [scoring]
//! weights-frequency = 0.7
//! weights-linguistic = 0.3
//!
//! [sources]
//! mode = closed-then-open
//! store = answers
//! cache-dir = cache
//! ```
//!
//! Relative paths in a file are taken relative to that file's directory.
//! Keys outside a section are accepted; a key under the wrong section is not.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use ini::{Ini, ParseOption};
use thiserror::Error;
use url::Url;

use crate::harness::{DEFAULT_THRESHOLD, HumanAggregate};
use crate::linguistic::{BuiltinRule, BuiltinRules, GrammarBackend, RemoteGrammarClient, SpellingDictionary};
use crate::preprocess::{
    DEFAULT_SENTENCE_DELIMITERS, DEFAULT_TOKEN_PATTERN, PreprocessConfig, PreprocessError, read_word_list,
};
use crate::scoring::{Grader, ScoreWeights, ScoringError};
use crate::sources::{
    DEFAULT_ENDPOINT, DEFAULT_MIN_INTERVAL, ExtractCache, MediaWikiClient, ModelAnswerStore, QuestionBank,
    ReferenceMode, SourceError,
};
use crate::transport::{DEFAULT_USER_AGENT, Transport};

pub const DEFAULT_CACHE_DIR: &str = "grader-cache";

#[derive(Clone, Copy, PartialEq, Eq)]
enum Kind {
    Value,
    Path,
}

/// Every recognised key with the section it belongs to.
const KEYS: &[(&str, &str, Kind)] = &[
    ("weights-frequency", "scoring", Kind::Value),
    ("weights-linguistic", "scoring", Kind::Value),
    ("stopwords", "preprocess", Kind::Path),
    ("acronyms", "preprocess", Kind::Path),
    ("token-pattern", "preprocess", Kind::Value),
    ("sentence-delimiters", "preprocess", Kind::Value),
    ("dictionary", "linguistic", Kind::Path),
    ("grammar", "linguistic", Kind::Value),
    ("grammar-rules", "linguistic", Kind::Value),
    ("grammar-endpoint", "linguistic", Kind::Value),
    ("grammar-language", "linguistic", Kind::Value),
    ("grammar-degrade", "linguistic", Kind::Value),
    ("grammar-max-in-flight", "linguistic", Kind::Value),
    ("mode", "sources", Kind::Value),
    ("endpoint", "sources", Kind::Value),
    ("offline", "sources", Kind::Value),
    ("cache-dir", "sources", Kind::Path),
    ("store", "sources", Kind::Path),
    ("questions", "sources", Kind::Path),
    ("user-agent", "sources", Kind::Value),
    ("request-interval-ms", "sources", Kind::Value),
    ("threshold", "harness", Kind::Value),
    ("workers", "harness", Kind::Value),
    ("human-aggregate", "harness", Kind::Value),
];

/// Every key a config file may use, in documentation order.
pub fn known_keys() -> impl Iterator<Item = &'static str> {
    KEYS.iter().map(|(k, _, _)| *k)
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {reason}")]
    Read { path: String, reason: String },
    #[error("config syntax: {0}")]
    Syntax(String),
    #[error("unknown config key {0:?}")]
    UnknownKey(String),
    #[error("key {key:?} belongs in section [{expected}], found in [{found}]")]
    WrongSection {
        key: String,
        expected: &'static str,
        found: String,
    },
    #[error("key {0:?} is set twice")]
    DuplicateKey(String),
    #[error("{key} = {value:?}: {reason}")]
    InvalidValue { key: String, value: String, reason: String },
    #[error("{key}: path {} does not exist", path.display())]
    MissingPath { key: &'static str, path: PathBuf },
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
}

/// Raw key/value pairs, already checked against the key table. Later
/// assignments win, which is how flags override the file.
#[derive(Debug, Clone, Default)]
pub struct Settings {
    values: BTreeMap<&'static str, String>,
}

fn lookup_key(key: &str) -> Result<(&'static str, &'static str, Kind), ConfigError> {
    KEYS.iter()
        .find(|(k, _, _)| *k == key)
        .copied()
        .ok_or_else(|| ConfigError::UnknownKey(key.to_owned()))
}

impl Settings {
    pub fn parse(body: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let opts = ParseOption {
            enabled_quote: false,
            enabled_escape: false,
            ..ParseOption::default()
        };
        let ini = Ini::load_from_str_opt(body, opts).map_err(|e| ConfigError::Syntax(e.to_string()))?;
        let mut settings = Settings::default();
        for (section, props) in ini.iter() {
            for (key, value) in props.iter() {
                let (key, expected, kind) = lookup_key(key)?;
                if let Some(found) = section {
                    if found != expected {
                        return Err(ConfigError::WrongSection {
                            key: key.to_owned(),
                            expected,
                            found: found.to_owned(),
                        });
                    }
                }
                let value = match kind {
                    Kind::Path => base_dir.join(value.trim()).display().to_string(),
                    Kind::Value => value.trim().to_owned(),
                };
                if settings.values.insert(key, value).is_some() {
                    return Err(ConfigError::DuplicateKey(key.to_owned()));
                }
            }
        }
        Ok(settings)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let body = fs::read_to_string(path).map_err(|e| ConfigError::Read {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        Self::parse(&body, path.parent().unwrap_or(Path::new(".")))
    }

    /// Sets or replaces a key. Paths given here are used as they are.
    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<(), ConfigError> {
        let (key, _, _) = lookup_key(key)?;
        self.values.insert(key, value.into());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GrammarKind {
    #[default]
    Builtin,
    Remote,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrammarSettings {
    pub kind: GrammarKind,
    pub rules: Vec<BuiltinRule>,
    pub endpoint: Option<Url>,
    pub language: String,
    /// Fall back to the builtin rules when the remote service fails.
    pub degrade: bool,
    pub max_in_flight: usize,
}

impl Default for GrammarSettings {
    fn default() -> Self {
        Self {
            kind: GrammarKind::Builtin,
            rules: BuiltinRule::ALL.to_vec(),
            endpoint: None,
            language: "en-US".into(),
            degrade: false,
            max_in_flight: 1,
        }
    }
}

/// Validated configuration for one run.
#[derive(Debug)]
pub struct GradingConfig {
    pub weights: ScoreWeights,
    pub preprocess: PreprocessConfig,
    /// `None` means the bundled word list.
    pub dictionary: Option<PathBuf>,
    pub grammar: GrammarSettings,
    pub mode: ReferenceMode,
    pub endpoint: Url,
    pub offline: bool,
    pub cache_dir: PathBuf,
    /// Created on first `store` if it does not exist yet.
    pub store: Option<PathBuf>,
    pub questions: Option<PathBuf>,
    pub user_agent: String,
    pub request_interval: Duration,
    pub threshold: f64,
    pub workers: usize,
    pub human_aggregate: HumanAggregate,
}

fn invalid(key: &str, value: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::InvalidValue {
        key: key.to_owned(),
        value: value.to_owned(),
        reason: reason.into(),
    }
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(invalid(key, value, "expected true or false")),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| invalid(key, value, e.to_string()))
}

fn existing_path(key: &'static str, value: &str) -> Result<PathBuf, ConfigError> {
    let path = PathBuf::from(value);
    if path.exists() {
        Ok(path)
    } else {
        Err(ConfigError::MissingPath { key, path })
    }
}

fn word_list(key: &'static str, value: Option<&str>, default: fn() -> Vec<String>) -> Result<Vec<String>, ConfigError> {
    match value {
        Some(v) => Ok(read_word_list(&existing_path(key, v)?)?),
        None => Ok(default()),
    }
}

impl GradingConfig {
    pub fn from_settings(s: &Settings) -> Result<Self, ConfigError> {
        let weights = match (s.get("weights-frequency"), s.get("weights-linguistic")) {
            (None, None) => ScoreWeights::default(),
            (f, l) => {
                let f: f64 = f.map_or(Ok(0.7), |v| parse_num("weights-frequency", v))?;
                // Setting one weight alone implies the other.
                let l: f64 = l.map_or(Ok(1.0 - f), |v| parse_num("weights-linguistic", v))?;
                ScoreWeights::new(f, l)?
            }
        };

        let stopwords = word_list("stopwords", s.get("stopwords"), PreprocessConfig::default_stopwords)?;
        let acronyms = word_list("acronyms", s.get("acronyms"), PreprocessConfig::default_acronyms)?;
        let delimiters: Vec<char> = match s.get("sentence-delimiters") {
            Some(d) if d.is_empty() => return Err(invalid("sentence-delimiters", d, "must not be empty")),
            Some(d) => d.chars().collect(),
            None => DEFAULT_SENTENCE_DELIMITERS.to_vec(),
        };
        let preprocess = PreprocessConfig::new(
            stopwords,
            acronyms,
            s.get("token-pattern").unwrap_or(DEFAULT_TOKEN_PATTERN),
            delimiters,
        )?;

        let dictionary = s.get("dictionary").map(|v| existing_path("dictionary", v)).transpose()?;

        let mut grammar = GrammarSettings::default();
        if let Some(v) = s.get("grammar") {
            grammar.kind = match v {
                "builtin" => GrammarKind::Builtin,
                "remote" => GrammarKind::Remote,
                _ => return Err(invalid("grammar", v, "expected builtin or remote")),
            };
        }
        if let Some(v) = s.get("grammar-rules") {
            grammar.rules = v
                .split(',')
                .map(str::trim)
                .filter(|r| !r.is_empty())
                .map(|r| BuiltinRule::from_id(r).ok_or_else(|| invalid("grammar-rules", v, format!("unknown rule {r:?}"))))
                .collect::<Result<_, _>>()?;
        }
        if let Some(v) = s.get("grammar-endpoint") {
            grammar.endpoint = Some(Url::parse(v).map_err(|e| invalid("grammar-endpoint", v, e.to_string()))?);
        }
        if let Some(v) = s.get("grammar-language") {
            grammar.language = v.to_owned();
        }
        if let Some(v) = s.get("grammar-degrade") {
            grammar.degrade = parse_bool("grammar-degrade", v)?;
        }
        if let Some(v) = s.get("grammar-max-in-flight") {
            grammar.max_in_flight = parse_num("grammar-max-in-flight", v)?;
            if grammar.max_in_flight == 0 {
                return Err(invalid("grammar-max-in-flight", v, "must be at least 1"));
            }
        }
        if grammar.kind == GrammarKind::Remote && grammar.endpoint.is_none() {
            return Err(invalid("grammar", "remote", "grammar-endpoint is required"));
        }

        let mode = match s.get("mode") {
            Some(v) => v.parse().map_err(|e: String| invalid("mode", v, e))?,
            None => ReferenceMode::default(),
        };
        let endpoint_raw = s.get("endpoint").unwrap_or(DEFAULT_ENDPOINT);
        let endpoint = Url::parse(endpoint_raw).map_err(|e| invalid("endpoint", endpoint_raw, e.to_string()))?;
        let offline = s.get("offline").map(|v| parse_bool("offline", v)).transpose()?.unwrap_or(false);
        let cache_dir = PathBuf::from(s.get("cache-dir").unwrap_or(DEFAULT_CACHE_DIR));
        let store = s.get("store").map(PathBuf::from);
        let questions = s.get("questions").map(|v| existing_path("questions", v)).transpose()?;
        let user_agent = s.get("user-agent").unwrap_or(DEFAULT_USER_AGENT).to_owned();
        let request_interval = match s.get("request-interval-ms") {
            Some(v) => Duration::from_millis(parse_num("request-interval-ms", v)?),
            None => DEFAULT_MIN_INTERVAL,
        };

        let threshold = match s.get("threshold") {
            Some(v) => {
                let t: f64 = parse_num("threshold", v)?;
                if !(0.0..=1.0).contains(&t) {
                    return Err(invalid("threshold", v, "must be in [0, 1]"));
                }
                t
            }
            None => DEFAULT_THRESHOLD,
        };
        let workers = match s.get("workers") {
            Some(v) => {
                let w: usize = parse_num("workers", v)?;
                if w == 0 {
                    return Err(invalid("workers", v, "must be at least 1"));
                }
                w
            }
            None => std::thread::available_parallelism().map_or(1, |n| n.get()),
        };
        let human_aggregate = match s.get("human-aggregate") {
            Some(v) => v.parse().map_err(|e: String| invalid("human-aggregate", v, e))?,
            None => HumanAggregate::default(),
        };

        Ok(Self {
            weights,
            preprocess,
            dictionary,
            grammar,
            mode,
            endpoint,
            offline,
            cache_dir,
            store,
            questions,
            user_agent,
            request_interval,
            threshold,
            workers,
            human_aggregate,
        })
    }

    /// `transport` is only used by a remote grammar backend.
    pub fn build_grader(&self, transport: Arc<dyn Transport>) -> Result<Grader, ConfigError> {
        let dictionary = match &self.dictionary {
            Some(p) => SpellingDictionary::from_path(p)?,
            None => SpellingDictionary::bundled(),
        };
        let builtin = BuiltinRules::new(self.grammar.rules.iter().copied()).with_delimiters(self.preprocess.delimiters());
        let grammar = match (self.grammar.kind, &self.grammar.endpoint) {
            (GrammarKind::Remote, Some(endpoint)) => GrammarBackend::Remote {
                client: RemoteGrammarClient::new(
                    endpoint.clone(),
                    &self.grammar.language,
                    transport,
                    self.grammar.max_in_flight,
                ),
                degrade_to: self.grammar.degrade.then_some(builtin),
            },
            _ => GrammarBackend::Builtin(builtin),
        };
        Ok(Grader {
            preprocess: self.preprocess.clone(),
            weights: self.weights,
            dictionary,
            grammar,
        })
    }

    pub fn mediawiki_client(&self, transport: Arc<dyn Transport>) -> MediaWikiClient {
        MediaWikiClient::new(self.endpoint.clone(), transport, ExtractCache::new(&self.cache_dir))
            .offline(self.offline)
            .min_interval(self.request_interval)
    }

    /// The closed-domain store, if one is configured.
    pub fn open_store(&self) -> Result<Option<ModelAnswerStore>, SourceError> {
        self.store.as_ref().map(ModelAnswerStore::open).transpose()
    }

    pub fn question_bank(&self) -> Result<Option<QuestionBank>, SourceError> {
        self.questions.as_deref().map(QuestionBank::load).transpose()
    }
}
