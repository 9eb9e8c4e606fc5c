use std::collections::HashSet;
use std::path::Path;

use crate::preprocess::{PreprocessError, read_word_list};

const BUNDLED_WORDS: &str = include_str!("../../data/english_words.txt");

/// Set of valid lowercase words for spelling checks.
#[derive(Debug, Clone, Default)]
pub struct SpellingDictionary {
    words: HashSet<String>,
}

impl SpellingDictionary {
    pub fn new<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self {
            words: words.into_iter().map(|w| w.as_ref().to_lowercase()).collect(),
        }
    }

    /// The bundled English word list (about 53k words).
    pub fn bundled() -> Self {
        Self::new(crate::preprocess::parse_word_list(BUNDLED_WORDS))
    }

    pub fn from_path(path: &Path) -> Result<Self, PreprocessError> {
        Ok(Self::new(read_word_list(path)?))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}
