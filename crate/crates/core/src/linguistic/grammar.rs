//! Grammar checking backends.
//!
//! The builtin backend is a deliberately shallow rule set:
//!
//! | id                       | fires when                                                        |
//! |--------------------------|-------------------------------------------------------------------|
//! | `capitalization`         | the first alphanumeric character of the sentence is lowercase     |
//! | `subject-verb-agreement` | `he`/`she`/`it` is directly followed by a base-form verb          |
//! | `doubled-word`           | the same word appears twice in a row (case-insensitive)           |
//! | `missing-terminator`     | the sentence does not end in a sentence delimiter                 |
//!
//! The agreement rule is skipped when the pronoun follows an auxiliary or
//! modal ("does he go", "will it work").
//!
//! The remote backend speaks the LanguageTool-style `/v2/check` protocol:
//! each sentence is POSTed as a form (`text`, `language`) and the response
//! is a JSON object `{"matches": [{"offset": n, "length": n, "rule": {"id": "..."}}]}`.
//! Each match becomes one issue carrying `rule.id`.

use std::fmt;
use std::sync::Arc;

use serde_json::Value;
use url::Url;

use super::LinguisticError;
use crate::preprocess::DEFAULT_SENTENCE_DELIMITERS;
use crate::transport::{InFlightLimit, Transport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BuiltinRule {
    Capitalization,
    SubjectVerbAgreement,
    DoubledWord,
    MissingTerminator,
}

impl BuiltinRule {
    pub const ALL: [BuiltinRule; 4] = [
        BuiltinRule::Capitalization,
        BuiltinRule::SubjectVerbAgreement,
        BuiltinRule::DoubledWord,
        BuiltinRule::MissingTerminator,
    ];

    pub fn id(self) -> &'static str {
        match self {
            BuiltinRule::Capitalization => "capitalization",
            BuiltinRule::SubjectVerbAgreement => "subject-verb-agreement",
            BuiltinRule::DoubledWord => "doubled-word",
            BuiltinRule::MissingTerminator => "missing-terminator",
        }
    }

    pub fn from_id(id: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|r| r.id() == id)
    }
}

impl fmt::Display for BuiltinRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrammarIssue {
    pub sentence_index: usize,
    pub rule_id: String,
}

impl GrammarIssue {
    fn new(sentence_index: usize, rule_id: impl Into<String>) -> Self {
        Self {
            sentence_index,
            rule_id: rule_id.into(),
        }
    }
}

const THIRD_PERSON_SINGULAR: [&str; 3] = ["he", "she", "it"];

// Verbs whose base form differs from both the past tense and the
// third-person singular, so "he <verb>" is unambiguously wrong.
const BASE_FORM_VERBS: &[&str] = &[
    "agree", "allow", "answer", "appear", "arrive", "ask", "become", "begin", "believe", "belong",
    "bring", "build", "buy", "call", "carry", "change", "choose", "come", "contain", "do",
    "drink", "drive", "eat", "explain", "fall", "feel", "find", "fly", "follow", "forget", "get",
    "give", "go", "grow", "happen", "have", "help", "hold", "keep", "know", "learn", "leave",
    "like", "live", "look", "lose", "love", "make", "mean", "meet", "move", "need", "offer",
    "pay", "play", "provide", "reach", "remain", "remember", "run", "say", "see", "seem",
    "sell", "send", "show", "sit", "sleep", "speak", "stand", "start", "stay", "study", "take",
    "talk", "teach", "tell", "think", "try", "turn", "understand", "use", "wait", "walk", "want",
    "watch", "win", "work", "write",
];

const AUXILIARIES: &[&str] = &[
    "do", "does", "did", "will", "would", "can", "could", "shall", "should", "may", "might",
    "must", "doesn", "didn", "won", "wouldn", "couldn", "shouldn", "let", "make", "made",
    "help", "helps", "helped", "see", "saw", "watch", "watched", "hear", "heard",
];

const CLOSING_PUNCTUATION: &[char] = &['"', '\'', '\u{201d}', '\u{2019}', ')', ']'];

/// The builtin, offline rule set.
#[derive(Debug, Clone)]
pub struct BuiltinRules {
    rules: Vec<BuiltinRule>,
    delimiters: Vec<char>,
}

impl Default for BuiltinRules {
    fn default() -> Self {
        Self::new(BuiltinRule::ALL)
    }
}

impl BuiltinRules {
    pub fn new(rules: impl IntoIterator<Item = BuiltinRule>) -> Self {
        let mut rules: Vec<_> = rules.into_iter().collect();
        rules.sort();
        rules.dedup();
        Self {
            rules,
            delimiters: DEFAULT_SENTENCE_DELIMITERS.to_vec(),
        }
    }

    pub fn with_delimiters(mut self, delimiters: &[char]) -> Self {
        self.delimiters = delimiters.to_vec();
        self
    }

    pub fn rules(&self) -> &[BuiltinRule] {
        &self.rules
    }

    /// Issues ordered by sentence, then by rule, then by position.
    pub fn check<S: AsRef<str>>(&self, sentences: &[S]) -> Vec<GrammarIssue> {
        let mut issues = Vec::new();
        for (idx, sentence) in sentences.iter().enumerate() {
            let sentence = sentence.as_ref();
            let words = words(sentence);
            for &rule in &self.rules {
                let hits = match rule {
                    BuiltinRule::Capitalization => usize::from(starts_lowercase(sentence)),
                    BuiltinRule::SubjectVerbAgreement => agreement_violations(&words),
                    BuiltinRule::DoubledWord => doubled_words(&words),
                    BuiltinRule::MissingTerminator => {
                        usize::from(!self.is_terminated(sentence))
                    }
                };
                issues.extend((0..hits).map(|_| GrammarIssue::new(idx, rule.id())));
            }
        }
        issues
    }

    fn is_terminated(&self, sentence: &str) -> bool {
        sentence
            .trim_end()
            .trim_end_matches(CLOSING_PUNCTUATION)
            .chars()
            .next_back()
            .is_some_and(|c| self.delimiters.contains(&c))
    }
}

fn words(sentence: &str) -> Vec<String> {
    sentence
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

fn starts_lowercase(sentence: &str) -> bool {
    sentence
        .chars()
        .find(|c| c.is_alphanumeric())
        .is_some_and(char::is_lowercase)
}

fn agreement_violations(words: &[String]) -> usize {
    words
        .windows(2)
        .enumerate()
        .filter(|(i, pair)| {
            THIRD_PERSON_SINGULAR.contains(&pair[0].as_str())
                && BASE_FORM_VERBS.contains(&pair[1].as_str())
                && !(*i > 0 && AUXILIARIES.contains(&words[i - 1].as_str()))
        })
        .count()
}

fn doubled_words(words: &[String]) -> usize {
    words
        .windows(2)
        .filter(|pair| pair[0] == pair[1] && pair[0].chars().all(char::is_alphabetic))
        .count()
}

/// Client for a remote grammar-checking service.
pub struct RemoteGrammarClient {
    endpoint: Url,
    language: String,
    transport: Arc<dyn Transport>,
    limit: InFlightLimit,
}

impl fmt::Debug for RemoteGrammarClient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RemoteGrammarClient")
            .field("endpoint", &self.endpoint.as_str())
            .field("language", &self.language)
            .field("max_in_flight", &self.limit.max())
            .finish()
    }
}

impl RemoteGrammarClient {
    pub fn new(endpoint: Url, language: &str, transport: Arc<dyn Transport>, max_in_flight: usize) -> Self {
        Self {
            endpoint,
            language: language.to_owned(),
            transport,
            limit: InFlightLimit::new(max_in_flight),
        }
    }

    pub fn check<S: AsRef<str>>(&self, sentences: &[S]) -> Result<Vec<GrammarIssue>, LinguisticError> {
        let mut issues = Vec::new();
        for (idx, sentence) in sentences.iter().enumerate() {
            let body = {
                let _permit = self.limit.acquire();
                self.transport
                    .post_form(
                        &self.endpoint,
                        &[("text", sentence.as_ref()), ("language", &self.language)],
                    )
                    .map_err(|e| LinguisticError::GrammarServiceUnavailable(e.to_string()))?
            };
            for rule_id in parse_matches(&body)? {
                issues.push(GrammarIssue::new(idx, rule_id));
            }
        }
        Ok(issues)
    }
}

fn parse_matches(body: &str) -> Result<Vec<String>, LinguisticError> {
    let malformed = |why: &str| LinguisticError::GrammarServiceUnavailable(format!("malformed response: {why}"));
    let json: Value = serde_json::from_str(body).map_err(|e| malformed(&e.to_string()))?;
    let matches = json
        .get("matches")
        .and_then(Value::as_array)
        .ok_or_else(|| malformed("missing matches array"))?;
    matches
        .iter()
        .map(|m| {
            m.get("rule")
                .and_then(|r| r.get("id"))
                .and_then(Value::as_str)
                .map(str::to_owned)
                .ok_or_else(|| malformed("match without rule.id"))
        })
        .collect()
}

/// The active grammar checker for a run.
#[derive(Debug)]
pub enum GrammarBackend {
    Builtin(BuiltinRules),
    Remote {
        client: RemoteGrammarClient,
        /// When set, a failing remote service falls back to these rules.
        degrade_to: Option<BuiltinRules>,
    },
}

impl Default for GrammarBackend {
    fn default() -> Self {
        GrammarBackend::Builtin(BuiltinRules::default())
    }
}

pub fn check_grammar<S: AsRef<str>>(
    sentences: &[S],
    backend: &GrammarBackend,
) -> Result<Vec<GrammarIssue>, LinguisticError> {
    match backend {
        GrammarBackend::Builtin(rules) => Ok(rules.check(sentences)),
        GrammarBackend::Remote { client, degrade_to } => match client.check(sentences) {
            Ok(issues) => Ok(issues),
            Err(LinguisticError::GrammarServiceUnavailable(_)) if degrade_to.is_some() => {
                Ok(degrade_to.as_ref().expect("checked above").check(sentences))
            }
            Err(e) => Err(e),
        },
    }
}
