//! Text rendering of a [`ScoreBreakdown`]. Numbers are shown rounded to two
//! decimals; the breakdown itself keeps full precision.

use std::fmt::Write as _;

use super::{MissingWord, ScoreBreakdown};

pub const RECORD_HEADER: &str = "question_id,aa_raw,aa_score,la_score,final_score,total_mark";

const MISSING_SHOWN: usize = 10;

/// One CSV data row matching [`RECORD_HEADER`].
pub fn record_line(b: &ScoreBreakdown) -> String {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record([
        b.question_id.clone(),
        format!("{:.2}", b.aa_raw),
        format!("{:.2}", b.aa_score),
        format!("{:.2}", b.la_score),
        format!("{:.2}", b.final_score),
        format!("{:.2}", b.total_mark),
    ])
    .expect("writing to memory");
    let bytes = w.into_inner().expect("flushing to memory");
    String::from_utf8(bytes)
        .expect("csv output is utf-8")
        .trim_end_matches('\n')
        .to_owned()
}

/// Human-readable report followed by the machine-readable record.
pub fn render_report(b: &ScoreBreakdown) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "question:          {}", b.question_id);
    if let Some(r) = &b.reference {
        let _ = writeln!(out, "reference:         {} ({})", r.source, r.detail);
    }

    match &b.comparison {
        None => {
            let _ = writeln!(out, "answer analysis:   blank script");
        }
        Some(c) => {
            let _ = writeln!(out, "answer analysis:   score {:.2} (raw {:.2})", c.aa_score, c.aa_raw);
            let reference_vocab = c.matched.len() + c.missing.len();
            let _ = writeln!(out, "  matched words:   {} of {}", c.matched.len(), reference_vocab);
            if !c.matched.is_empty() {
                let words: Vec<String> = c
                    .matched
                    .iter()
                    .map(|m| format!("{} {}/{}", m.word, m.student_count, m.reference_count))
                    .collect();
                let _ = writeln!(out, "    {}", words.join(", "));
            }
            if !c.missing.is_empty() {
                let _ = writeln!(out, "  missing words:   {} (most frequent first)", c.missing.len());
                let _ = writeln!(out, "    {}", top_missing(&c.missing).join(", "));
            }
        }
    }

    match &b.linguistic {
        None => {
            let _ = writeln!(out, "linguistic:        score {:.2}", b.la_score);
        }
        Some(l) => {
            let r = &l.report;
            let _ = writeln!(
                out,
                "linguistic:        score {:.2} (penalty {:.2})",
                r.la_score, r.penalty
            );
            let _ = writeln!(out, "  spelling:        {} in {} words", r.s_mistake, r.t_word);
            if !l.spelling.is_empty() {
                let words: Vec<&str> = l.spelling.iter().map(|m| m.token.as_str()).collect();
                let _ = writeln!(out, "    {}", words.join(", "));
            }
            let _ = writeln!(out, "  grammar:         {} in {} sentences", r.g_mistake, r.t_sentence);
            for issue in &l.grammar {
                let _ = writeln!(out, "    sentence {}: {}", issue.sentence_index + 1, issue.rule_id);
            }
        }
    }

    let _ = writeln!(
        out,
        "weights:           frequency {:.2}, linguistic {:.2}",
        b.weights.frequency(),
        b.weights.linguistic()
    );
    let _ = writeln!(out, "final score:       {:.2} / {:.2}", b.final_score, b.total_mark);
    let _ = writeln!(out);
    let _ = writeln!(out, "{RECORD_HEADER}");
    let _ = writeln!(out, "{}", record_line(b));
    out
}

fn top_missing(missing: &[MissingWord]) -> Vec<String> {
    let mut sorted: Vec<&MissingWord> = missing.iter().collect();
    sorted.sort_by(|a, b| b.reference_count.cmp(&a.reference_count).then_with(|| a.word.cmp(&b.word)));
    let mut shown: Vec<String> = sorted
        .iter()
        .take(MISSING_SHOWN)
        .map(|m| format!("{} {}", m.word, m.reference_count))
        .collect();
    if sorted.len() > MISSING_SHOWN {
        shown.push(format!("... {} more", sorted.len() - MISSING_SHOWN));
    }
    shown
}
