//! On-disk cache of fetched reference extracts.
//!
//! An entry for a keyword list lives under a content address derived from
//! the keywords (SHA-256 of the newline-joined list, hex encoded):
//!
//! ```text
//! <key>.meta   title<TAB>..., fetched_at<TAB>unix-seconds, keywords<TAB>...
//! <key>.txt    the plain-text extract, byte for byte as fetched
//! <key>.freq   optional model frequency table (word<TAB>count)
//! ```
//!
//! Every file is written to a temporary sibling and renamed into place, and
//! the `.txt` file is written last, so a reader that finds it also finds
//! complete metadata. Entries never expire; [`ExtractCache::purge`] clears
//! them.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use sha2::{Digest, Sha256};
use tempfile::NamedTempFile;

use super::KeywordSet;
use crate::frequency::FrequencyTable;

const EXTENSIONS: [&str; 3] = ["txt", "meta", "freq"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CachedExtract {
    pub title: String,
    pub text: String,
    pub fetched_at: SystemTime,
}

#[derive(Debug, Clone)]
pub struct ExtractCache {
    dir: PathBuf,
}

pub fn cache_key(keywords: &KeywordSet) -> String {
    let digest = Sha256::digest(keywords.as_slice().join("\n").as_bytes());
    hex::encode(digest)
}

impl ExtractCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn entry_path(&self, keywords: &KeywordSet, ext: &str) -> PathBuf {
        self.dir.join(format!("{}.{ext}", cache_key(keywords)))
    }

    pub fn get(&self, keywords: &KeywordSet) -> io::Result<Option<CachedExtract>> {
        let text = match fs::read_to_string(self.entry_path(keywords, "txt")) {
            Ok(t) => t,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e),
        };
        let meta = fs::read_to_string(self.entry_path(keywords, "meta"))?;
        let field = |name: &str| {
            meta.lines()
                .find_map(|l| l.strip_prefix(name).and_then(|r| r.strip_prefix('\t')))
                .map(str::to_owned)
        };
        let title = field("title")
            .filter(|t| !t.is_empty())
            .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidData, "cache metadata lacks a title"))?;
        let secs = field("fetched_at").and_then(|s| s.parse::<u64>().ok()).unwrap_or(0);
        Ok(Some(CachedExtract {
            title,
            text,
            fetched_at: UNIX_EPOCH + Duration::from_secs(secs),
        }))
    }

    pub fn put(&self, keywords: &KeywordSet, entry: &CachedExtract) -> io::Result<()> {
        fs::create_dir_all(&self.dir)?;
        let secs = entry
            .fetched_at
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs());
        let meta = format!(
            "title\t{}\nfetched_at\t{secs}\nkeywords\t{}\n",
            single_line(&entry.title),
            keywords.joined()
        );
        self.write_atomic(&self.entry_path(keywords, "meta"), meta.as_bytes())?;
        self.write_atomic(&self.entry_path(keywords, "txt"), entry.text.as_bytes())
    }

    pub fn put_frequency(&self, keywords: &KeywordSet, table: &FrequencyTable) -> io::Result<PathBuf> {
        fs::create_dir_all(&self.dir)?;
        let path = self.entry_path(keywords, "freq");
        self.write_atomic(&path, table.to_tsv().as_bytes())?;
        Ok(path)
    }

    /// Removes every cache file; returns the number of extract entries removed.
    pub fn purge(&self) -> io::Result<usize> {
        let read = match fs::read_dir(&self.dir) {
            Ok(r) => r,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(0),
            Err(e) => return Err(e),
        };
        let mut removed = 0;
        for entry in read {
            let path = entry?.path();
            let ext = path.extension().and_then(|e| e.to_str()).unwrap_or_default();
            if path.is_file() && EXTENSIONS.contains(&ext) {
                fs::remove_file(&path)?;
                if ext == "txt" {
                    removed += 1;
                }
            }
        }
        Ok(removed)
    }

    fn write_atomic(&self, path: &Path, bytes: &[u8]) -> io::Result<()> {
        let mut tmp = NamedTempFile::new_in(&self.dir)?;
        tmp.write_all(bytes)?;
        tmp.as_file().sync_all()?;
        tmp.persist(path).map_err(|e| e.error)?;
        Ok(())
    }
}

fn single_line(s: &str) -> String {
    s.replace(['\n', '\r', '\t'], " ")
}
