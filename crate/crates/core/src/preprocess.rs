//! Text normalization pipeline: special-character stripping, sentence
//! splitting, tokenization, case normalization and stopword removal.
//!
//! Every function here is total over arbitrary UTF-8 input (including the
//! empty string). Whether an empty answer is acceptable is decided by the
//! scoring layer, not here.

use std::collections::BTreeSet;
use std::fs;
use std::ops::Deref;
use std::path::Path;

use regex::Regex;
use thiserror::Error;

/// Maximal runs of letters and digits.
pub const DEFAULT_TOKEN_PATTERN: &str = r"[\p{L}\p{N}]+";
pub const DEFAULT_SENTENCE_DELIMITERS: [char; 3] = ['.', '!', '?'];

const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords.txt");
const DEFAULT_ACRONYMS: &str = include_str!("../data/acronyms.txt");

#[derive(Debug, Error)]
pub enum PreprocessError {
    #[error("stopword {0:?} must be a nonempty lowercase word")]
    InvalidStopword(String),
    #[error("acronym {0:?} must contain at least one uppercase character")]
    InvalidAcronym(String),
    #[error("invalid token pattern: {0}")]
    InvalidPattern(#[from] regex::Error),
    #[error("sentence delimiter {0:?} must not be alphanumeric or whitespace")]
    InvalidDelimiter(char),
    #[error("cannot normalize an empty token")]
    EmptyToken,
    #[error("cannot read word list {path}: {source}")]
    WordList {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Parses a word-list file body: one entry per line, blank lines and
/// `#`-prefixed comment lines ignored, surrounding whitespace trimmed.
pub fn parse_word_list(body: &str) -> impl Iterator<Item = &str> {
    body.lines()
        .map(str::trim)
        .filter(|line| !line.is_empty() && !line.starts_with('#'))
}

pub fn read_word_list(path: &Path) -> Result<Vec<String>, PreprocessError> {
    let body = fs::read_to_string(path).map_err(|source| PreprocessError::WordList {
        path: path.display().to_string(),
        source,
    })?;
    Ok(parse_word_list(&body).map(str::to_owned).collect())
}

#[derive(Debug, Clone)]
pub struct PreprocessConfig {
    stopwords: BTreeSet<String>,
    acronyms: BTreeSet<String>,
    token_pattern: Regex,
    delimiters: Vec<char>,
}

impl PreprocessConfig {
    pub fn new<S, A, D>(
        stopwords: S,
        acronyms: A,
        token_pattern: &str,
        delimiters: D,
    ) -> Result<Self, PreprocessError>
    where
        S: IntoIterator,
        S::Item: Into<String>,
        A: IntoIterator,
        A::Item: Into<String>,
        D: IntoIterator<Item = char>,
    {
        let stopwords = stopwords
            .into_iter()
            .map(Into::into)
            .map(|w: String| {
                if w.is_empty() || w.to_lowercase() != w {
                    Err(PreprocessError::InvalidStopword(w))
                } else {
                    Ok(w)
                }
            })
            .collect::<Result<BTreeSet<_>, _>>()?;
        let acronyms = acronyms
            .into_iter()
            .map(Into::into)
            .map(|a: String| {
                if a.chars().any(char::is_uppercase) && !a.chars().any(char::is_whitespace) {
                    Ok(a)
                } else {
                    Err(PreprocessError::InvalidAcronym(a))
                }
            })
            .collect::<Result<BTreeSet<_>, _>>()?;
        let mut delims = Vec::new();
        for d in delimiters {
            if d.is_alphanumeric() || d.is_whitespace() {
                return Err(PreprocessError::InvalidDelimiter(d));
            }
            if !delims.contains(&d) {
                delims.push(d);
            }
        }
        Ok(Self {
            stopwords,
            acronyms,
            token_pattern: Regex::new(token_pattern)?,
            delimiters: delims,
        })
    }

    pub fn default_stopwords() -> Vec<String> {
        parse_word_list(DEFAULT_STOPWORDS).map(str::to_owned).collect()
    }

    pub fn default_acronyms() -> Vec<String> {
        parse_word_list(DEFAULT_ACRONYMS).map(str::to_owned).collect()
    }

    pub fn stopwords(&self) -> &BTreeSet<String> {
        &self.stopwords
    }

    pub fn acronyms(&self) -> &BTreeSet<String> {
        &self.acronyms
    }

    pub fn token_pattern(&self) -> &str {
        self.token_pattern.as_str()
    }

    pub fn delimiters(&self) -> &[char] {
        &self.delimiters
    }

    pub fn is_stopword(&self, word: &str) -> bool {
        self.stopwords.contains(word)
    }

    pub fn is_acronym(&self, token: &str) -> bool {
        self.acronyms.contains(token)
    }

    pub fn is_delimiter(&self, c: char) -> bool {
        self.delimiters.contains(&c)
    }
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self::new(
            Self::default_stopwords(),
            Self::default_acronyms(),
            DEFAULT_TOKEN_PATTERN,
            DEFAULT_SENTENCE_DELIMITERS,
        )
        .expect("bundled preprocessing defaults are valid")
    }
}

/// An ordered sequence of word tokens.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenStream(Vec<String>);

impl TokenStream {
    pub fn new(tokens: Vec<String>) -> Self {
        Self(tokens)
    }

    pub fn into_inner(self) -> Vec<String> {
        self.0
    }

    /// Space-joined rendering, suitable for feeding back into the pipeline.
    pub fn join(&self) -> String {
        self.0.join(" ")
    }
}

impl Deref for TokenStream {
    type Target = [String];

    fn deref(&self) -> &[String] {
        &self.0
    }
}

impl FromIterator<String> for TokenStream {
    fn from_iter<I: IntoIterator<Item = String>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

impl IntoIterator for TokenStream {
    type Item = String;
    type IntoIter = std::vec::IntoIter<String>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.into_iter()
    }
}

impl<'a> IntoIterator for &'a TokenStream {
    type Item = &'a String;
    type IntoIter = std::slice::Iter<'a, String>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// Removes everything except letters, digits, whitespace and sentence
/// delimiters. A removed character separates its neighbours: the gap it
/// leaves (together with any adjacent whitespace) becomes a single space,
/// or nothing at the very start or end of the text. Whitespace runs that
/// did not touch a removal are copied unchanged.
pub fn strip_special(text: &str, config: &PreprocessConfig) -> String {
    let mut out = String::with_capacity(text.len());
    let mut gap = String::new();
    let mut removed = false;

    for c in text.chars() {
        if c.is_whitespace() {
            gap.push(c);
        } else if c.is_alphanumeric() || config.is_delimiter(c) {
            if removed {
                if !out.is_empty() {
                    out.push(' ');
                }
            } else {
                out.push_str(&gap);
            }
            gap.clear();
            removed = false;
            out.push(c);
        } else {
            removed = true;
        }
    }
    if !removed {
        out.push_str(&gap);
    }
    out
}

/// Splits text into trimmed sentences. A sentence ends at a run of
/// delimiters that is followed by whitespace or the end of the text;
/// whitespace-only runs are dropped.
pub fn split_sentences(text: &str, config: &PreprocessConfig) -> Vec<String> {
    let mut sentences = Vec::new();
    let mut start = 0;
    let mut chars = text.char_indices().peekable();

    while let Some((_, c)) = chars.next() {
        if !config.is_delimiter(c) {
            continue;
        }
        while let Some(&(_, next)) = chars.peek() {
            if config.is_delimiter(next) {
                chars.next();
            } else {
                break;
            }
        }
        let end = chars.peek().map_or(text.len(), |&(i, _)| i);
        let at_boundary = chars.peek().is_none_or(|&(_, next)| next.is_whitespace());
        if at_boundary {
            push_sentence(&mut sentences, &text[start..end]);
            start = end;
        }
    }
    push_sentence(&mut sentences, &text[start..]);
    sentences
}

fn push_sentence(sentences: &mut Vec<String>, run: &str) {
    let run = run.trim();
    if !run.is_empty() {
        sentences.push(run.to_owned());
    }
}

/// Maximal matches of the configured token pattern, in order, unnormalized.
pub fn tokenize(text: &str, config: &PreprocessConfig) -> TokenStream {
    config
        .token_pattern
        .find_iter(text)
        .map(|m| m.as_str())
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect()
}

pub fn normalize(token: &str, config: &PreprocessConfig) -> Result<String, PreprocessError> {
    if token.is_empty() {
        return Err(PreprocessError::EmptyToken);
    }
    if config.is_acronym(token) {
        Ok(token.to_owned())
    } else {
        Ok(token.to_lowercase())
    }
}

pub fn remove_stopwords(tokens: TokenStream, config: &PreprocessConfig) -> TokenStream {
    tokens
        .into_iter()
        .filter(|t| !config.is_stopword(&t.to_lowercase()))
        .collect()
}

/// strip_special, tokenize, normalize, remove_stopwords.
pub fn preprocess(text: &str, config: &PreprocessConfig) -> TokenStream {
    let stripped = strip_special(text, config);
    let normalized = tokenize(&stripped, config)
        .into_iter()
        .map(|t| normalize(&t, config).expect("tokenize never yields empty tokens"))
        .collect();
    remove_stopwords(normalized, config)
}

/// Raw word count: tokens of the stripped text before normalization and
/// stopword removal.
pub fn count_words(text: &str, config: &PreprocessConfig) -> usize {
    tokenize(&strip_special(text, config), config).len()
}
