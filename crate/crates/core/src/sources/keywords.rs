use std::collections::HashSet;

use super::{Question, SourceError};
use crate::preprocess::{self, PreprocessConfig};

/// Words that shape a question but never identify its topic.
pub const QUESTION_WORDS: [&str; 13] = [
    "what", "who", "when", "where", "why", "how", "do", "does", "know", "describe", "define",
    "about", "you",
];

/// Distinct topic words of a question, in first-occurrence order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeywordSet(Vec<String>);

impl KeywordSet {
    pub fn new(keywords: Vec<String>) -> Result<Self, SourceError> {
        let mut seen = HashSet::new();
        let deduped: Vec<String> = keywords.into_iter().filter(|k| seen.insert(k.clone())).collect();
        if deduped.is_empty() {
            return Err(SourceError::UnextractableQuestion(String::new()));
        }
        Ok(Self(deduped))
    }

    pub fn as_slice(&self) -> &[String] {
        &self.0
    }

    /// Space-joined keywords, as used for search queries.
    pub fn joined(&self) -> String {
        self.0.join(" ")
    }
}

pub fn extract_keywords(question: &Question, config: &PreprocessConfig) -> Result<KeywordSet, SourceError> {
    let tokens = preprocess::preprocess(&question.text, config);
    let keywords: Vec<String> = tokens
        .into_iter()
        .filter(|t| !QUESTION_WORDS.contains(&t.to_lowercase().as_str()))
        .collect();
    KeywordSet::new(keywords).map_err(|_| SourceError::UnextractableQuestion(question.text.clone()))
}
