use std::collections::HashMap;

use super::strip::strip_comments;

const MAX_ORDER: usize = 4;

/// Code-aware tokens: runs of identifier characters (letters, digits, `_`)
/// form one token, every other non-whitespace character is its own token.
pub fn tokenize(code: &str) -> Vec<&str> {
    let mut tokens = Vec::new();
    let mut word_start: Option<usize> = None;
    for (idx, c) in code.char_indices() {
        let is_word = c.is_alphanumeric() || c == '_';
        if is_word {
            word_start.get_or_insert(idx);
            continue;
        }
        if let Some(start) = word_start.take() {
            tokens.push(&code[start..idx]);
        }
        if !c.is_whitespace() {
            tokens.push(&code[idx..idx + c.len_utf8()]);
        }
    }
    if let Some(start) = word_start {
        tokens.push(&code[start..]);
    }
    tokens
}

/// Sentence BLEU of `hypothesis` against one `reference`: clipped n-gram
/// precisions for n = 1..=4 with uniform weights and a brevity penalty.
/// Orders n >= 2 use add-one smoothing; a zero unigram precision yields 0.
pub fn bleu(reference: &[&str], hypothesis: &[&str]) -> f64 {
    if reference.is_empty() || hypothesis.is_empty() {
        return 0.0;
    }
    let mut log_sum = 0.0;
    for order in 1..=MAX_ORDER {
        let (matches, total) = clipped_matches(reference, hypothesis, order);
        let precision = if order == 1 {
            if matches == 0 {
                return 0.0;
            }
            matches as f64 / total as f64
        } else {
            (matches + 1) as f64 / (total + 1) as f64
        };
        log_sum += precision.ln();
    }
    let (c, r) = (hypothesis.len() as f64, reference.len() as f64);
    let brevity = if c > r { 1.0 } else { (1.0 - r / c).exp() };
    brevity * (log_sum / MAX_ORDER as f64).exp()
}

fn clipped_matches(reference: &[&str], hypothesis: &[&str], order: usize) -> (usize, usize) {
    if hypothesis.len() < order {
        return (0, 0);
    }
    let mut available: HashMap<&[&str], usize> = HashMap::new();
    if reference.len() >= order {
        for gram in reference.windows(order) {
            *available.entry(gram).or_default() += 1;
        }
    }
    let mut matches = 0;
    for gram in hypothesis.windows(order) {
        if let Some(left) = available.get_mut(gram) {
            if *left > 0 {
                *left -= 1;
                matches += 1;
            }
        }
    }
    (matches, hypothesis.len() + 1 - order)
}

/// BLEU between two programs after comment stripping. Empty programs score 0.
pub fn code_bleu(reference: &str, hypothesis: &str) -> f64 {
    let reference = strip_comments(reference);
    let hypothesis = strip_comments(hypothesis);
    bleu(&tokenize(&reference), &tokenize(&hypothesis))
}
