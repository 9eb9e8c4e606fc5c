//! Spelling and grammar analysis and the linguistic score.
//!
//! The raw mistake rate is a penalty: `s/words·100 + g/sentences·100`.
//! The score reported is `clamp(100 − penalty, 0, 100)`, so a mistake-free
//! answer scores 100 and heavy error rates bottom out at 0.

mod dictionary;
mod grammar;

use thiserror::Error;

use crate::preprocess::{self, PreprocessConfig};

pub use dictionary::SpellingDictionary;
pub use grammar::{
    BuiltinRule, BuiltinRules, GrammarBackend, GrammarIssue, RemoteGrammarClient, check_grammar,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinguisticError {
    #[error("spelling dictionary is empty")]
    MisconfiguredChecker,
    #[error("answer has no words or no sentences")]
    EmptyAnswer,
    #[error("grammar service unavailable: {0}")]
    GrammarServiceUnavailable(String),
    #[error("{s_mistake} spelling mistakes exceed {t_word} words")]
    InconsistentCounts { s_mistake: usize, t_word: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpellingMistake {
    pub token: String,
    /// Index of the token in the raw token stream.
    pub position: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinguisticReport {
    pub s_mistake: usize,
    pub g_mistake: usize,
    pub t_word: usize,
    pub t_sentence: usize,
    pub penalty: f64,
    pub la_score: f64,
}

/// Raw tokens whose normalized form is unknown to the dictionary. Numeric
/// tokens and whitelisted acronyms are never mistakes.
pub fn check_spelling(
    text: &str,
    dict: &SpellingDictionary,
    config: &PreprocessConfig,
) -> Result<Vec<SpellingMistake>, LinguisticError> {
    if dict.is_empty() {
        return Err(LinguisticError::MisconfiguredChecker);
    }
    let tokens = preprocess::tokenize(&preprocess::strip_special(text, config), config);
    Ok(tokens
        .into_iter()
        .enumerate()
        .filter(|(_, token)| {
            if config.is_acronym(token) || token.chars().all(char::is_numeric) {
                return false;
            }
            let normalized = preprocess::normalize(token, config).expect("tokens are nonempty");
            !dict.contains(&normalized)
        })
        .map(|(position, token)| SpellingMistake { token, position })
        .collect())
}

pub fn linguistic_score(
    s_mistake: usize,
    g_mistake: usize,
    t_word: usize,
    t_sentence: usize,
) -> Result<LinguisticReport, LinguisticError> {
    if t_word == 0 || t_sentence == 0 {
        return Err(LinguisticError::EmptyAnswer);
    }
    if s_mistake > t_word {
        return Err(LinguisticError::InconsistentCounts { s_mistake, t_word });
    }
    let penalty =
        s_mistake as f64 / t_word as f64 * 100.0 + g_mistake as f64 / t_sentence as f64 * 100.0;
    Ok(LinguisticReport {
        s_mistake,
        g_mistake,
        t_word,
        t_sentence,
        penalty,
        la_score: (100.0 - penalty).clamp(0.0, 100.0),
    })
}

/// Full linguistic pass over a raw answer, with the mistakes that fed the
/// report.
#[derive(Debug, Clone, PartialEq)]
pub struct LinguisticAnalysis {
    pub report: LinguisticReport,
    pub spelling: Vec<SpellingMistake>,
    pub grammar: Vec<GrammarIssue>,
}

pub fn analyze(
    text: &str,
    dict: &SpellingDictionary,
    grammar: &GrammarBackend,
    config: &PreprocessConfig,
) -> Result<LinguisticAnalysis, LinguisticError> {
    let spelling = check_spelling(text, dict, config)?;
    let sentences = preprocess::split_sentences(text, config);
    let t_word = preprocess::count_words(text, config);
    if t_word == 0 || sentences.is_empty() {
        return Err(LinguisticError::EmptyAnswer);
    }
    let grammar = check_grammar(&sentences, grammar)?;
    let report = linguistic_score(spelling.len(), grammar.len(), t_word, sentences.len())?;
    Ok(LinguisticAnalysis {
        report,
        spelling,
        grammar,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn small_dict() -> SpellingDictionary {
        SpellingDictionary::new(["the", "cat", "sat"])
    }

    #[test]
    fn spelling_examples() {
        let c = PreprocessConfig::default();
        let found = check_spelling("the catt sat", &small_dict(), &c).unwrap();
        assert_eq!(found, [SpellingMistake { token: "catt".into(), position: 1 }]);
        assert!(check_spelling("", &small_dict(), &c).unwrap().is_empty());
        assert!(check_spelling("the cat sat", &small_dict(), &c).unwrap().is_empty());
    }

    #[test]
    fn spelling_exemptions_and_case() {
        let c = PreprocessConfig::default();
        assert!(check_spelling("The CAT sat 1999 US", &small_dict(), &c).unwrap().is_empty());
        assert_eq!(
            check_spelling("the cat sat UK2", &small_dict(), &c).unwrap(),
            [SpellingMistake { token: "UK2".into(), position: 3 }]
        );
    }

    #[test]
    fn empty_dictionary_is_misconfigured() {
        let c = PreprocessConfig::default();
        assert_eq!(
            check_spelling("anything", &SpellingDictionary::default(), &c),
            Err(LinguisticError::MisconfiguredChecker)
        );
    }

    #[test]
    fn score_examples() {
        let r = linguistic_score(2, 1, 100, 10).unwrap();
        assert_eq!(r.penalty, 12.0);
        assert_eq!(r.la_score, 88.0);

        let r = linguistic_score(0, 0, 50, 5).unwrap();
        assert_eq!(r.penalty, 0.0);
        assert_eq!(r.la_score, 100.0);

        let r = linguistic_score(50, 10, 50, 10).unwrap();
        assert_eq!(r.penalty, 200.0);
        assert_eq!(r.la_score, 0.0);
    }

    #[test]
    fn score_errors() {
        assert_eq!(linguistic_score(0, 0, 0, 1), Err(LinguisticError::EmptyAnswer));
        assert_eq!(linguistic_score(0, 0, 1, 0), Err(LinguisticError::EmptyAnswer));
        assert!(matches!(
            linguistic_score(3, 0, 2, 1),
            Err(LinguisticError::InconsistentCounts { .. })
        ));
    }

    #[test]
    fn analyze_counts_raw_words_and_sentences() {
        let c = PreprocessConfig::default();
        let dict = SpellingDictionary::new(["the", "cat", "sat", "he", "go", "home"]);
        let a = analyze("The catt sat. he go home.", &dict, &GrammarBackend::default(), &c).unwrap();
        assert_eq!(a.report.t_word, 6);
        assert_eq!(a.report.t_sentence, 2);
        assert_eq!(a.report.s_mistake, 1);
        assert_eq!(a.report.g_mistake, 2);
        // 1/6·100 + 2/2·100
        assert!((a.report.penalty - (100.0 / 6.0 + 100.0)).abs() < 1e-12);
        assert_eq!(a.report.la_score, 0.0);

        assert_eq!(
            analyze("  ", &dict, &GrammarBackend::default(), &c),
            Err(LinguisticError::EmptyAnswer)
        );
    }

    proptest! {
        #[test]
        fn score_bounded_and_monotone(t_word in 1usize..200, t_sentence in 1usize..30, s in 0usize..200, g in 0usize..60) {
            let s = s.min(t_word);
            let base = linguistic_score(s, g, t_word, t_sentence).unwrap();
            prop_assert!((0.0..=100.0).contains(&base.la_score));
            if s < t_word {
                let more_s = linguistic_score(s + 1, g, t_word, t_sentence).unwrap();
                prop_assert!(more_s.la_score <= base.la_score);
            }
            let more_g = linguistic_score(s, g + 1, t_word, t_sentence).unwrap();
            prop_assert!(more_g.la_score <= base.la_score);
            if s == 0 && g == 0 {
                prop_assert_eq!(base.la_score, 100.0);
            }
        }

        #[test]
        fn dictionary_words_are_never_flagged(words in prop::collection::vec("[a-z]{1,8}", 1..30)) {
            let c = PreprocessConfig::default();
            let dict = SpellingDictionary::new(&words);
            let text = words.join(" ");
            prop_assert!(check_spelling(&text, &dict, &c).unwrap().is_empty());
        }
    }
}
