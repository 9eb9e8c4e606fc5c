//! `grader`: grade answer scripts from the command line.
//!
//! Exit codes:
//!
//! | code | meaning                                                    |
//! |------|------------------------------------------------------------|
//! | 0    | success                                                    |
//! | 1    | any other failure                                          |
//! | 2    | reference error (unknown question, no page, network, store) |
//! | 3    | configuration or usage error                               |
//! | 4    | input error (unreadable file, bad corpus, duplicate id)    |

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "grader", version, about = "Grade free-text answer scripts by word frequency and linguistic quality")]
pub struct Cli {
    #[command(flatten)]
    pub overrides: Overrides,

    #[command(subcommand)]
    pub command: Command,
}

/// Every config key, as a flag of the same name. Flags win over the file.
#[derive(Debug, Default, Args)]
pub struct Overrides {
    /// Config file (INI-style `key = value` lines under `[section]` headers).
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Where reference answers come from: open, closed or closed-then-open.
    #[arg(long, global = true)]
    pub mode: Option<String>,
    /// Pass mark as a fraction of the total, used for metrics.
    #[arg(long, global = true)]
    pub threshold: Option<String>,
    #[arg(long, global = true)]
    pub weights_frequency: Option<String>,
    #[arg(long, global = true)]
    pub weights_linguistic: Option<String>,
    #[arg(long, global = true, value_name = "DIR")]
    pub cache_dir: Option<String>,
    /// Closed-domain model answer store.
    #[arg(long, global = true, value_name = "DIR")]
    pub store: Option<String>,
    #[arg(long, global = true)]
    pub workers: Option<String>,
    /// MediaWiki api.php URL.
    #[arg(long, global = true, value_name = "URL")]
    pub endpoint: Option<String>,
    /// Never touch the network; fetches must hit the cache.
    #[arg(long, global = true)]
    pub offline: bool,
    #[arg(long, global = true, value_name = "FILE")]
    pub stopwords: Option<String>,
    #[arg(long, global = true, value_name = "FILE")]
    pub acronyms: Option<String>,
    #[arg(long, global = true, value_name = "REGEX")]
    pub token_pattern: Option<String>,
    #[arg(long, global = true, value_name = "CHARS")]
    pub sentence_delimiters: Option<String>,
    /// Spelling word list; defaults to the bundled one.
    #[arg(long, global = true, value_name = "FILE")]
    pub dictionary: Option<String>,
    /// builtin or remote.
    #[arg(long, global = true)]
    pub grammar: Option<String>,
    /// Comma-separated builtin rule ids.
    #[arg(long, global = true)]
    pub grammar_rules: Option<String>,
    #[arg(long, global = true, value_name = "URL")]
    pub grammar_endpoint: Option<String>,
    #[arg(long, global = true)]
    pub grammar_language: Option<String>,
    #[arg(long, global = true)]
    pub grammar_degrade: Option<String>,
    #[arg(long, global = true)]
    pub grammar_max_in_flight: Option<String>,
    /// Question bank: `question_id<TAB>total_mark<TAB>text` lines.
    #[arg(long, global = true, value_name = "FILE")]
    pub questions: Option<String>,
    #[arg(long, global = true)]
    pub user_agent: Option<String>,
    #[arg(long, global = true)]
    pub request_interval_ms: Option<String>,
    /// mean or median of several human marks.
    #[arg(long, global = true)]
    pub human_aggregate: Option<String>,
}

impl Overrides {
    pub fn pairs(&self) -> Vec<(&'static str, String)> {
        let optional = [
            ("mode", &self.mode),
            ("threshold", &self.threshold),
            ("weights-frequency", &self.weights_frequency),
            ("weights-linguistic", &self.weights_linguistic),
            ("cache-dir", &self.cache_dir),
            ("store", &self.store),
            ("workers", &self.workers),
            ("endpoint", &self.endpoint),
            ("stopwords", &self.stopwords),
            ("acronyms", &self.acronyms),
            ("token-pattern", &self.token_pattern),
            ("sentence-delimiters", &self.sentence_delimiters),
            ("dictionary", &self.dictionary),
            ("grammar", &self.grammar),
            ("grammar-rules", &self.grammar_rules),
            ("grammar-endpoint", &self.grammar_endpoint),
            ("grammar-language", &self.grammar_language),
            ("grammar-degrade", &self.grammar_degrade),
            ("grammar-max-in-flight", &self.grammar_max_in_flight),
            ("questions", &self.questions),
            ("user-agent", &self.user_agent),
            ("request-interval-ms", &self.request_interval_ms),
            ("human-aggregate", &self.human_aggregate),
        ];
        let mut pairs: Vec<(&'static str, String)> = optional
            .into_iter()
            .filter_map(|(k, v)| v.clone().map(|v| (k, v)))
            .collect();
        if self.offline {
            pairs.push(("offline", "true".into()));
        }
        pairs
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Grade one answer script and print the score breakdown.
    Grade {
        answer_file: PathBuf,
        question_id: String,
        /// Question text, when the id is not in the question bank.
        #[arg(long)]
        question_text: Option<String>,
        #[arg(long)]
        total_mark: Option<f64>,
    },
    /// Grade a corpus file and, when human marks are present, report agreement.
    Batch { corpus: PathBuf },
    /// Resolve a question to an encyclopedia page and cache its text.
    Fetch { question_text: String },
    /// Add or replace a model answer in the closed-domain store.
    Store {
        question_id: String,
        answer_file: PathBuf,
        total_mark: f64,
        #[arg(long)]
        overwrite: bool,
    },
    /// Delete every cached extract.
    PurgeCache,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { commands::EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
