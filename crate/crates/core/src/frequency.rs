//! Word-frequency tables and their plain-text serialization.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FrequencyError {
    #[error("reference frequency table is empty")]
    EmptyReference,
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

/// Word → occurrence count. Keys iterate in lexicographic order, and every
/// stored count is at least one.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FrequencyTable {
    counts: BTreeMap<String, u64>,
    total: u64,
}

impl FrequencyTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, word: &str) {
        self.add_count(word, 1);
    }

    fn add_count(&mut self, word: &str, n: u64) {
        if n == 0 {
            return;
        }
        match self.counts.get_mut(word) {
            Some(c) => *c += n,
            None => {
                self.counts.insert(word.to_owned(), n);
            }
        }
        self.total += n;
    }

    pub fn get(&self, word: &str) -> Option<u64> {
        self.counts.get(word).copied()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.counts.contains_key(word)
    }

    /// Number of distinct words.
    pub fn distinct_count(&self) -> usize {
        self.counts.len()
    }

    /// Sum of all counts.
    pub fn total_count(&self) -> u64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.counts.iter().map(|(w, &c)| (w.as_str(), c))
    }

    /// `word<TAB>count` lines, sorted by word.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (word, count) in self.iter() {
            let _ = writeln!(out, "{word}\t{count}");
        }
        out
    }

    pub fn from_tsv(body: &str) -> Result<Self, FrequencyError> {
        let mut table = Self::new();
        for (idx, line) in body.lines().enumerate() {
            let line_no = idx + 1;
            if line.is_empty() {
                continue;
            }
            let err = |reason: &str| FrequencyError::Parse {
                line: line_no,
                reason: reason.to_owned(),
            };
            let (word, count) = line.split_once('\t').ok_or_else(|| err("missing tab"))?;
            if word.is_empty() || word.chars().any(char::is_whitespace) {
                return Err(err("invalid word"));
            }
            let count: u64 = count.parse().map_err(|_| err("invalid count"))?;
            if count == 0 {
                return Err(err("count must be positive"));
            }
            if table.contains(word) {
                return Err(err("duplicate word"));
            }
            table.add_count(word, count);
        }
        Ok(table)
    }
}

impl<S: AsRef<str>> FromIterator<S> for FrequencyTable {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        let mut table = Self::new();
        for word in iter {
            table.add(word.as_ref());
        }
        table
    }
}

/// Counts occurrences of each token.
pub fn build_frequency<I, S>(tokens: I) -> FrequencyTable
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    tokens.into_iter().collect()
}

/// Share of each word in the table, as a percentage of the total count.
pub fn weight_table(reference: &FrequencyTable) -> Result<BTreeMap<String, f64>, FrequencyError> {
    if reference.total_count() == 0 {
        return Err(FrequencyError::EmptyReference);
    }
    let total = reference.total_count() as f64;
    Ok(reference
        .iter()
        .map(|(w, c)| (w.to_owned(), c as f64 / total * 100.0))
        .collect())
}
