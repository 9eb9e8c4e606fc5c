//! Closed-domain model answers kept on disk.
//!
//! Layout under the store root:
//!
//! ```text
//! manifest.tsv          question_id<TAB>relative_path<TAB>total_mark
//! answers/<id>.txt      one plain-text model answer per question
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use tempfile::NamedTempFile;

use super::{ReferenceAnswer, SourceError, SourceKind};

pub const MANIFEST_FILE: &str = "manifest.tsv";
const ANSWERS_DIR: &str = "answers";

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    /// Relative to the store root.
    pub path: PathBuf,
    pub total_mark: f64,
}

#[derive(Debug, Clone)]
pub struct ModelAnswerStore {
    root: PathBuf,
    entries: BTreeMap<String, ManifestEntry>,
}

fn io_err(path: &Path, source: io::Error) -> SourceError {
    SourceError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && !id.contains(['\t', '\n', '\r'])
}

impl ModelAnswerStore {
    /// Loads the manifest under `root`. A root without a manifest is an
    /// empty store.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, SourceError> {
        let root = root.into();
        let manifest = root.join(MANIFEST_FILE);
        let body = match fs::read_to_string(&manifest) {
            Ok(b) => b,
            Err(e) if e.kind() == io::ErrorKind::NotFound => String::new(),
            Err(e) => return Err(io_err(&manifest, e)),
        };
        let mut entries = BTreeMap::new();
        for (idx, line) in body.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let corrupt = |why: &str| SourceError::CorruptStore(format!("{MANIFEST_FILE} line {}: {why}", idx + 1));
            let mut fields = line.split('\t');
            let (Some(id), Some(path), Some(mark), None) =
                (fields.next(), fields.next(), fields.next(), fields.next())
            else {
                return Err(corrupt("expected three tab-separated fields"));
            };
            if !valid_id(id) || path.is_empty() {
                return Err(corrupt("empty question id or path"));
            }
            let total_mark: f64 = mark.trim().parse().map_err(|_| corrupt("invalid total_mark"))?;
            if !(total_mark.is_finite() && total_mark > 0.0) {
                return Err(corrupt("total_mark must be positive"));
            }
            let entry = ManifestEntry {
                path: PathBuf::from(path),
                total_mark,
            };
            if entries.insert(id.to_owned(), entry).is_some() {
                return Err(corrupt(&format!("duplicate question id {id:?}")));
            }
        }
        Ok(Self { root, entries })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn entry(&self, id: &str) -> Option<&ManifestEntry> {
        self.entries.get(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn lookup(&self, id: &str) -> Result<ReferenceAnswer, SourceError> {
        let entry = self
            .entries
            .get(id)
            .ok_or_else(|| SourceError::UnknownQuestion(id.to_owned()))?;
        let path = self.root.join(&entry.path);
        let text = fs::read_to_string(&path).map_err(|e| {
            SourceError::CorruptStore(format!("{id}: cannot read {}: {e}", path.display()))
        })?;
        if text.trim().is_empty() {
            return Err(SourceError::CorruptStore(format!("{id}: model answer is empty")));
        }
        let fetched_at = fs::metadata(&path)
            .and_then(|m| m.modified())
            .unwrap_or(std::time::UNIX_EPOCH);
        Ok(ReferenceAnswer {
            text,
            source: SourceKind::ClosedDomain,
            source_detail: id.to_owned(),
            fetched_at,
        })
    }

    /// Checks that every manifest entry resolves to a readable document.
    pub fn verify(&self) -> Result<(), SourceError> {
        for id in self.entries.keys() {
            self.lookup(id)?;
        }
        Ok(())
    }

    /// Stores `text` as the model answer for `id` and rewrites the manifest.
    pub fn insert(&mut self, id: &str, text: &str, total_mark: f64, overwrite: bool) -> Result<(), SourceError> {
        if !valid_id(id) {
            return Err(SourceError::InvalidQuestion(format!("invalid question id {id:?}")));
        }
        if !(total_mark.is_finite() && total_mark > 0.0) {
            return Err(SourceError::InvalidQuestion(format!("total mark {total_mark} must be positive")));
        }
        if text.trim().is_empty() {
            return Err(SourceError::InvalidQuestion(format!("model answer for {id} is empty")));
        }
        if self.entries.contains_key(id) && !overwrite {
            return Err(SourceError::DuplicateQuestion(id.to_owned()));
        }
        let rel = Path::new(ANSWERS_DIR).join(document_name(id));
        let answers = self.root.join(ANSWERS_DIR);
        fs::create_dir_all(&answers).map_err(|e| io_err(&answers, e))?;
        write_atomic(&self.root.join(&rel), text.as_bytes())?;

        let previous = self.entries.insert(
            id.to_owned(),
            ManifestEntry {
                path: rel,
                total_mark,
            },
        );
        if let Err(e) = self.write_manifest() {
            match previous {
                Some(p) => self.entries.insert(id.to_owned(), p),
                None => self.entries.remove(id),
            };
            return Err(e);
        }
        Ok(())
    }

    fn write_manifest(&self) -> Result<(), SourceError> {
        let mut body = String::new();
        for (id, entry) in &self.entries {
            body.push_str(&format!("{id}\t{}\t{}\n", entry.path.display(), entry.total_mark));
        }
        write_atomic(&self.root.join(MANIFEST_FILE), body.as_bytes())
    }
}

fn document_name(id: &str) -> String {
    let safe: String = id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    if safe == id {
        format!("{safe}.txt")
    } else {
        let digest = hex::encode(Sha256::digest(id.as_bytes()));
        format!("{safe}-{}.txt", &digest[..8])
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), SourceError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let write = || -> io::Result<()> {
        fs::create_dir_all(dir)?;
        let mut tmp = NamedTempFile::new_in(dir)?;
        tmp.write_all(bytes)?;
        tmp.as_file().sync_all()?;
        tmp.persist(path).map_err(|e| e.error)?;
        Ok(())
    };
    write().map_err(|e| io_err(path, e))
}
