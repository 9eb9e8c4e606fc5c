//! Straight-line re-implementation of the frequency comparison, working on
//! plain `(word, count)` vectors with linear lookups. Kept independent of
//! the library's table types so it can check them.

pub type Counts = Vec<(String, u64)>;

fn find(counts: &[(String, u64)], word: &str) -> Option<usize> {
    counts.iter().position(|(w, _)| w == word)
}

/// Returns the unclamped accumulator.
pub fn naive_aa_raw(student: &Counts, reference: &Counts) -> f64 {
    let mut aa = 0.0_f64;
    let mut reference = reference.clone();

    let length_swf = student.len() as f64;
    let length_rwf: u64 = reference.iter().map(|(_, c)| *c).sum();

    let mut weights: Vec<(String, f64)> = Vec::new();
    for (word, count) in &reference {
        weights.push((word.clone(), *count as f64 / length_rwf as f64 * 100.0));
    }
    let length_wrwf = weights.len() as f64;

    for (word, _) in student {
        if let Some((_, w)) = weights.iter().find(|(k, _)| k == word) {
            aa += w / length_wrwf;
        }
    }

    for (word, s_count) in student {
        if let Some(i) = find(&reference, word) {
            let r_count = reference[i].1 as f64;
            aa += *s_count as f64 / r_count * 100.0 + *s_count as f64 / length_swf;
            reference[i].1 = 0;
        }
    }

    #[allow(clippy::needless_range_loop)]
    for i in 0..reference.len() {
        if reference[i].1 != 0 {
            aa -= reference[i].1 as f64 / length_swf * 100.0;
            reference[i].1 = 0;
        }
    }
    aa
}

pub fn naive_aa_score(student: &Counts, reference: &Counts) -> f64 {
    naive_aa_raw(student, reference).clamp(0.0, 100.0)
}

pub fn counts(pairs: &[(&str, u64)]) -> Counts {
    pairs.iter().map(|(w, c)| (w.to_string(), *c)).collect()
}
