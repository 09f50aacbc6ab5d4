//! Edit distance, character error rate and pseudo-label error rate.

use crate::error::{Error, Result};

/// Levenshtein distance with unit costs.
pub fn edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Character-level edit distance between two strings.
pub fn char_edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    edit_distance(&a, &b)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvalPair<T> {
    pub reference: Vec<T>,
    pub hypothesis: Vec<T>,
}

impl<T> EvalPair<T> {
    pub fn new(reference: Vec<T>, hypothesis: Vec<T>) -> Self {
        Self { reference, hypothesis }
    }
}

impl EvalPair<char> {
    pub fn from_text(reference: &str, hypothesis: &str) -> Self {
        Self::new(reference.chars().collect(), hypothesis.chars().collect())
    }
}

/// Micro-averaged error rate in percent: total edits over total reference
/// length.
pub fn cer<T: PartialEq>(pairs: &[EvalPair<T>]) -> Result<f64> {
    let (edits, len) = pairs.iter().fold((0usize, 0usize), |(e, l), p| {
        (e + edit_distance(&p.reference, &p.hypothesis), l + p.reference.len())
    });
    if len == 0 {
        return Err(Error::EmptyReference);
    }
    Ok(100.0 * edits as f64 / len as f64)
}

/// Error rate of pseudo-labels against ground truth. Both slices are
/// `(utterance id, tokens)` and must list the same ids in the same order.
pub fn p_cer<T: PartialEq + Clone>(pseudo: &[(String, Vec<T>)], truth: &[(String, Vec<T>)]) -> Result<f64> {
    if pseudo.len() != truth.len() {
        return Err(Error::IdMismatch(format!(
            "{} pseudo-labels vs {} references",
            pseudo.len(),
            truth.len()
        )));
    }
    if pseudo.is_empty() {
        return Err(Error::EmptyReference);
    }
    let mut pairs = Vec::with_capacity(pseudo.len());
    for ((pid, p), (tid, t)) in pseudo.iter().zip(truth) {
        if pid != tid {
            return Err(Error::IdMismatch(format!("{pid} vs {tid}")));
        }
        pairs.push(EvalPair::new(t.clone(), p.clone()));
    }
    cer(&pairs)
}
