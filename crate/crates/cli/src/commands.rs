use std::fs;
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use grader_core::config::{ConfigError, GradingConfig, Settings};
use grader_core::frequency::build_frequency;
use grader_core::harness::{
    self, FailureStage, GradedCorpus, HarnessError, compute_metrics, evaluate_batch,
};
use grader_core::preprocess::preprocess;
use grader_core::scoring::{GradeError, ScoringError, render_report};
use grader_core::sources::{
    ModelAnswerStore, Question, SourceError, extract_keywords, find_question, resolve_reference,
};
use grader_core::transport::{HttpTransport, Transport};

use crate::{Cli, Command, Overrides};

pub const EXIT_OTHER: u8 = 1;
pub const EXIT_REFERENCE: u8 = 2;
pub const EXIT_CONFIG: u8 = 3;
pub const EXIT_INPUT: u8 = 4;

const HTTP_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::new(EXIT_CONFIG, e.to_string())
    }
}

fn source_code(e: &SourceError) -> u8 {
    match e {
        SourceError::DuplicateQuestion(_) | SourceError::InvalidQuestion(_) | SourceError::Io { .. } => EXIT_INPUT,
        SourceError::Cache(_) => EXIT_OTHER,
        _ => EXIT_REFERENCE,
    }
}

impl From<SourceError> for Failure {
    fn from(e: SourceError) -> Self {
        Failure::new(source_code(&e), e.to_string())
    }
}

impl From<GradeError> for Failure {
    fn from(e: GradeError) -> Self {
        let code = match e {
            GradeError::Scoring(ScoringError::EmptyReference) => EXIT_REFERENCE,
            _ => EXIT_OTHER,
        };
        Failure::new(code, e.to_string())
    }
}

fn stage_code(stage: FailureStage) -> u8 {
    match stage {
        FailureStage::Input => EXIT_INPUT,
        FailureStage::Question | FailureStage::Reference => EXIT_REFERENCE,
        FailureStage::Grading => EXIT_OTHER,
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        let code = match &e {
            HarnessError::Io { .. } | HarnessError::CorpusParse { .. } | HarnessError::CorpusMismatch(_) => EXIT_INPUT,
            HarnessError::InvalidThreshold(_) => EXIT_CONFIG,
            HarnessError::EmptyBatch { failures } if failures.is_empty() => EXIT_INPUT,
            HarnessError::EmptyBatch { failures } => {
                let first = stage_code(failures[0].stage);
                if failures.iter().all(|f| stage_code(f.stage) == first) {
                    first
                } else {
                    EXIT_OTHER
                }
            }
            HarnessError::WorkerPool { .. } => EXIT_OTHER,
        };
        let mut message = e.to_string();
        if let HarnessError::EmptyBatch { failures } = &e {
            for f in failures {
                message.push_str(&format!("\n  {} {}: {} ({})", f.question_id, f.student_id, f.reason, f.stage));
            }
        }
        Failure::new(code, message)
    }
}

fn load_config(overrides: &Overrides) -> Result<GradingConfig, Failure> {
    let mut settings = match &overrides.config {
        Some(path) => Settings::load(path)?,
        None => Settings::default(),
    };
    for (key, value) in overrides.pairs() {
        settings.set(key, value)?;
    }
    Ok(GradingConfig::from_settings(&settings)?)
}

fn read_input(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::new(EXIT_INPUT, format!("{}: {e}", path.display())))
}

pub fn run(cli: &Cli) -> Result<(), Failure> {
    let config = load_config(&cli.overrides)?;
    let transport: Arc<dyn Transport> = Arc::new(HttpTransport::new(&config.user_agent, HTTP_TIMEOUT));
    match &cli.command {
        Command::Grade {
            answer_file,
            question_id,
            question_text,
            total_mark,
        } => grade(&config, transport, answer_file, question_id, question_text.as_deref(), *total_mark),
        Command::Batch { corpus } => batch(&config, transport, corpus),
        Command::Fetch { question_text } => fetch(&config, transport, question_text),
        Command::Store {
            question_id,
            answer_file,
            total_mark,
            overwrite,
        } => store(&config, question_id, answer_file, *total_mark, *overwrite),
        Command::PurgeCache => {
            let removed = config
                .mediawiki_client(transport)
                .cache()
                .purge()
                .map_err(|e| Failure::new(EXIT_OTHER, format!("{}: {e}", config.cache_dir.display())))?;
            println!("removed {removed} cached extracts from {}", config.cache_dir.display());
            Ok(())
        }
    }
}

fn grade(
    config: &GradingConfig,
    transport: Arc<dyn Transport>,
    answer_file: &Path,
    question_id: &str,
    question_text: Option<&str>,
    total_mark: Option<f64>,
) -> Result<(), Failure> {
    let answer = read_input(answer_file)?;
    let store = config.open_store()?;
    let bank = config.question_bank()?;
    let question = match (find_question(question_id, bank.as_ref(), store.as_ref()), question_text, total_mark) {
        (Ok(q), text, mark) => Question::new(
            &q.id,
            text.unwrap_or(&q.text),
            mark.unwrap_or(q.total_mark),
        )?,
        (Err(SourceError::UnknownQuestion(_)), Some(text), Some(mark)) => Question::new(question_id, text, mark)?,
        (Err(e), _, _) => return Err(e.into()),
    };
    let grader = config.build_grader(transport.clone())?;
    let client = config.mediawiki_client(transport);
    let reference = resolve_reference(&question, config.mode, store.as_ref(), Some(&client), &grader.preprocess)?;
    let breakdown = grader.grade(&answer, &reference, &question)?;
    print!("{}", render_report(&breakdown));
    Ok(())
}

fn batch(config: &GradingConfig, transport: Arc<dyn Transport>, corpus_path: &Path) -> Result<(), Failure> {
    let corpus = GradedCorpus::load(corpus_path)?;
    let store = config.open_store()?;
    let bank = config.question_bank()?;
    let grader = config.build_grader(transport.clone())?;
    let client = config.mediawiki_client(transport);

    let outcome = evaluate_batch(
        &corpus,
        &grader,
        |id| find_question(id, bank.as_ref(), store.as_ref()),
        |q| resolve_reference(q, config.mode, store.as_ref(), Some(&client), &grader.preprocess),
        config.workers,
    )?;
    let metrics = if corpus.has_human_scores() {
        Some(compute_metrics(&outcome.scored, &corpus, config.threshold, config.human_aggregate)?)
    } else {
        None
    };

    print!("{}", harness::render_batch(&outcome.scored));
    if !outcome.failures.is_empty() {
        println!();
        println!("failures:");
        print!("{}", harness::render_failures(&outcome.failures));
    }
    if let Some(m) = metrics {
        println!();
        println!("metrics ({} human marks):", config.human_aggregate);
        print!("{}", harness::render_metrics(&m));
    }
    Ok(())
}

fn fetch(config: &GradingConfig, transport: Arc<dyn Transport>, question_text: &str) -> Result<(), Failure> {
    let question = Question::new("fetch", question_text, 1.0)?;
    let keywords = extract_keywords(&question, &config.preprocess)?;
    let client = config.mediawiki_client(transport);
    let outcome = client.fetch_with_origin(&keywords)?;
    let table = build_frequency(preprocess(&outcome.reference.text, &config.preprocess));
    let freq_path = client.cache().put_frequency(&keywords, &table).map_err(SourceError::Cache)?;

    println!("keywords: {}", keywords.as_slice().join(", "));
    println!("title:    {}", outcome.reference.source_detail);
    println!("source:   {}", if outcome.from_cache { "cache" } else { "network" });
    println!("words:    {} distinct, {} total", table.distinct_count(), table.total_count());
    println!("cached:   {}", freq_path.with_extension("txt").display());
    Ok(())
}

fn store(
    config: &GradingConfig,
    question_id: &str,
    answer_file: &Path,
    total_mark: f64,
    overwrite: bool,
) -> Result<(), Failure> {
    let root = config
        .store
        .as_ref()
        .ok_or_else(|| Failure::new(EXIT_CONFIG, "no store configured (set --store or `store` in the config)"))?;
    let text = read_input(answer_file)?;
    let mut store = ModelAnswerStore::open(root).map_err(|e| Failure::new(EXIT_INPUT, e.to_string()))?;
    let replaced = store.entry(question_id).is_some();
    store.insert(question_id, &text, total_mark, overwrite)?;
    println!(
        "{} {question_id} (total mark {total_mark}) in {}",
        if replaced { "replaced" } else { "stored" },
        root.display()
    );
    Ok(())
}
