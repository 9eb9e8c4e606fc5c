//! End-to-end runs of the `grader` binary. Nothing here touches the network:
//! open-domain runs are offline against a cache warmed through the library.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::UNIX_EPOCH;

use grader_core::preprocess::PreprocessConfig;
use grader_core::sources::{CachedExtract, ExtractCache, Question, extract_keywords};
use tempfile::TempDir;

const DHAKA_QUESTION: &str = "What do you know about University of Dhaka?";

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn grader(dir: &Path, args: &[&str]) -> Run {
    let Output { status, stdout, stderr } = Command::new(env!("CARGO_BIN_EXE_grader"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn grader");
    Run {
        code: status.code().expect("exit code"),
        stdout: String::from_utf8(stdout).unwrap(),
        stderr: String::from_utf8(stderr).unwrap(),
    }
}

fn warm_cache(cache: &Path) {
    let q = Question::new("dhaka", DHAKA_QUESTION, 10.0).unwrap();
    let keywords = extract_keywords(&q, &PreprocessConfig::default()).unwrap();
    let entry = CachedExtract {
        title: "University of Dhaka".into(),
        text: fs::read_to_string(fixture("dhaka_extract.txt")).unwrap(),
        fetched_at: UNIX_EPOCH,
    };
    ExtractCache::new(cache).put(&keywords, &entry).unwrap();
}

/// A temp dir holding a store with the cats question and a warm cache.
fn workspace() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    let model = fixture("cats_model.txt");
    let r = grader(dir.path(), &["--store", "store", "store", "cats", model.to_str().unwrap(), "10"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    warm_cache(&dir.path().join("cache"));
    dir
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn help_and_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(grader(dir.path(), &["--help"]).code, 0);
    assert_eq!(grader(dir.path(), &["--version"]).code, 0);
    assert_eq!(grader(dir.path(), &[]).code, 3);
    assert_eq!(grader(dir.path(), &["grade", "--no-such-flag"]).code, 3);
}

#[test]
fn grade_closed_domain() {
    let dir = workspace();
    let answer = fixture("cats_answer.txt");
    let r = grader(dir.path(), &["--store", "store", "--mode", "closed", "grade", path(&answer), "cats"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stderr.is_empty());
    assert!(r.stdout.contains("reference:         closed-domain (cats)"));
    assert!(r.stdout.contains("question_id,aa_raw,aa_score,la_score,final_score,total_mark\ncats,"));
}

#[test]
fn grade_unknown_question_in_closed_mode() {
    let dir = workspace();
    let answer = fixture("cats_answer.txt");
    let r = grader(dir.path(), &["--store", "store", "--mode", "closed", "grade", path(&answer), "dogs"]);
    assert_eq!(r.code, 2);
    assert!(r.stdout.is_empty());
    assert!(r.stderr.contains("unknown question"), "{}", r.stderr);

    // Known text but no model answer: closed mode still has nothing to compare with.
    let r = grader(
        dir.path(),
        &["--store", "store", "--mode", "closed", "grade", path(&answer), "dogs", "--question-text", "Describe dogs.", "--total-mark", "5"],
    );
    assert_eq!(r.code, 2);
}

#[test]
fn config_errors_exit_3() {
    let dir = workspace();
    let answer = fixture("cats_answer.txt");
    fs::write(dir.path().join("bad.ini"), "[sources]\nmode = sideways\n").unwrap();
    fs::write(dir.path().join("unknown.ini"), "[sources]\ncolour = blue\n").unwrap();
    fs::write(dir.path().join("broken.ini"), "[sources\n").unwrap();
    for cfg in ["bad.ini", "unknown.ini", "broken.ini", "missing.ini"] {
        let r = grader(dir.path(), &["--config", cfg, "grade", path(&answer), "cats"]);
        assert_eq!(r.code, 3, "{cfg}: {}", r.stderr);
        assert!(r.stdout.is_empty());
    }
    let r = grader(dir.path(), &["--weights-frequency", "0.9", "--weights-linguistic", "0.9", "grade", path(&answer), "cats"]);
    assert_eq!(r.code, 3);
}

#[test]
fn config_file_values_and_flag_overrides() {
    let dir = workspace();
    let answer = fixture("cats_answer.txt");
    fs::write(dir.path().join("grader.ini"), "[sources]\nstore = store\nmode = open\noffline = true\n").unwrap();
    // Open mode cannot resolve "cats" offline; the flag switches to closed.
    let r = grader(dir.path(), &["--config", "grader.ini", "grade", path(&answer), "cats"]);
    assert_eq!(r.code, 2, "{}", r.stderr);
    let r = grader(dir.path(), &["--config", "grader.ini", "--mode", "closed", "grade", path(&answer), "cats"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
}

#[test]
fn unreadable_answer_exits_4() {
    let dir = workspace();
    let r = grader(dir.path(), &["--store", "store", "grade", "no-such-file.txt", "cats"]);
    assert_eq!(r.code, 4);
}

#[test]
fn open_domain_grade_is_byte_stable_offline() {
    let dir = workspace();
    let answer = fixture("dhaka_answer.txt");
    let args = [
        "--cache-dir", "cache", "--offline", "--mode", "open", "grade", path(&answer), "dhaka",
        "--question-text", DHAKA_QUESTION, "--total-mark", "10",
    ];
    let first = grader(dir.path(), &args);
    assert_eq!(first.code, 0, "{}", first.stderr);
    assert!(first.stdout.contains("open-domain (University of Dhaka)"));
    for _ in 0..2 {
        assert_eq!(grader(dir.path(), &args).stdout, first.stdout);
    }
}

#[test]
fn fetch_offline() {
    let dir = workspace();
    let r = grader(dir.path(), &["--cache-dir", "cache", "--offline", "fetch", DHAKA_QUESTION]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stdout.contains("keywords: university, dhaka"));
    assert!(r.stdout.contains("title:    University of Dhaka"));
    assert!(r.stdout.contains("source:   cache"));
    let freq_files = fs::read_dir(dir.path().join("cache"))
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "freq"))
        .count();
    assert_eq!(freq_files, 1);

    let r = grader(dir.path(), &["--cache-dir", "cache", "--offline", "fetch", "What is zzqxv qqqq?"]);
    assert_eq!(r.code, 2);
    let r = grader(dir.path(), &["--cache-dir", "cache", "--offline", "fetch", "What do you know?"]);
    assert_eq!(r.code, 2);
}

#[test]
fn store_admin() {
    let dir = tempfile::tempdir().unwrap();
    let model = fixture("cats_model.txt");
    let other = fixture("dogs_answer.txt");
    let manifest = dir.path().join("store/manifest.tsv");

    let r = grader(dir.path(), &["--store", "store", "store", "cats", path(&model), "10"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(fs::read_to_string(&manifest).unwrap().lines().count(), 1);

    let r = grader(dir.path(), &["--store", "store", "store", "dogs", path(&other), "5"]);
    assert_eq!(r.code, 0);
    assert_eq!(fs::read_to_string(&manifest).unwrap().lines().count(), 2);

    let r = grader(dir.path(), &["--store", "store", "store", "cats", path(&other), "8"]);
    assert_eq!(r.code, 4);
    assert!(r.stderr.contains("already stored"));

    let r = grader(dir.path(), &["--store", "store", "store", "cats", path(&other), "8", "--overwrite"]);
    assert_eq!(r.code, 0);
    assert!(r.stdout.starts_with("replaced cats"));
    let body = fs::read_to_string(&manifest).unwrap();
    assert_eq!(body.lines().count(), 2);
    assert!(body.lines().any(|l| l.starts_with("cats\t") && l.ends_with("\t8")), "{body}");

    let r = grader(dir.path(), &["store", "cats", path(&model), "10"]);
    assert_eq!(r.code, 3, "store without a configured root");
}

fn write_corpus(dir: &Path, body: &str) -> PathBuf {
    fs::copy(fixture("cats_answer.txt"), dir.join("a1.txt")).unwrap();
    fs::copy(fixture("dogs_answer.txt"), dir.join("a2.txt")).unwrap();
    fs::copy(fixture("cats_model.txt"), dir.join("a3.txt")).unwrap();
    let p = dir.join("corpus.csv");
    fs::write(&p, body).unwrap();
    p
}

#[test]
fn batch_with_human_scores_reports_metrics() {
    let dir = workspace();
    let corpus = write_corpus(
        dir.path(),
        "question_id,student_id,answer_path,human_score\ncats,s1,a1.txt,7;8\ncats,s2,a2.txt,1\ncats,s3,a3.txt,10\n",
    );
    let r = grader(dir.path(), &["--store", "store", "--mode", "closed", "--workers", "2", "batch", path(&corpus)]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stdout.starts_with("question_id,student_id,aa_raw,aa_score,la_score,final_score,total_mark\n"));
    assert_eq!(r.stdout.lines().filter(|l| l.starts_with("cats,s")).count(), 3);
    assert!(r.stdout.contains("metrics (mean human marks):"));
    assert!(r.stdout.contains("precision,recall,f_score,threshold,tp,fp,fn,tn"));
    assert!(!r.stdout.contains("failures:"));
}

#[test]
fn batch_without_human_scores_omits_metrics() {
    let dir = workspace();
    let corpus = write_corpus(
        dir.path(),
        "question_id,student_id,answer_path,human_score\ncats,s1,a1.txt,\ncats,s2,a2.txt,\ndogs,s3,a3.txt,\n",
    );
    let r = grader(dir.path(), &["--store", "store", "--mode", "closed", "batch", path(&corpus)]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(!r.stdout.contains("metrics"));
    assert!(r.stdout.contains("failures:\nquestion_id,student_id,stage,reason\ndogs,s3,question,"));
    assert_eq!(r.stdout.lines().filter(|l| l.starts_with("cats,s")).count(), 2);
}

#[test]
fn batch_input_errors() {
    let dir = workspace();
    let r = grader(dir.path(), &["--store", "store", "batch", "missing.csv"]);
    assert_eq!(r.code, 4);
    let corpus = write_corpus(dir.path(), "id,who,file\n");
    assert_eq!(grader(dir.path(), &["--store", "store", "batch", path(&corpus)]).code, 4);
    let corpus = write_corpus(dir.path(), "question_id,student_id,answer_path,human_score\n");
    assert_eq!(grader(dir.path(), &["--store", "store", "batch", path(&corpus)]).code, 4);
    let corpus = write_corpus(dir.path(), "question_id,student_id,answer_path,human_score\ndogs,s1,a1.txt,\n");
    let r = grader(dir.path(), &["--store", "store", "--mode", "closed", "batch", path(&corpus)]);
    assert_eq!(r.code, 2, "every entry failed on its reference");
}

#[test]
fn purge_cache() {
    let dir = workspace();
    let r = grader(dir.path(), &["--cache-dir", "cache", "purge-cache"]);
    assert_eq!(r.code, 0);
    assert!(r.stdout.starts_with("removed 1 cached extracts"));
    let r = grader(dir.path(), &["--cache-dir", "cache", "--offline", "fetch", DHAKA_QUESTION]);
    assert_eq!(r.code, 2);
}
