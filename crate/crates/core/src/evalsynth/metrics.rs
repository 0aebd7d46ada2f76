//! Aligned-utterance (AU) and aligned-word (AW) error rates against gold.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aligncore::dis;
use crate::dataset::SegmentRecord;
use crate::num::Scalar;
use crate::review::{read_jsonl, write_jsonl, ReviewError};
use crate::transcript::{clean_text, join_words, CleanOptions, Word};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no gold annotation for emitted utterance {0:?}")]
    MissingGold(String),
    #[error(transparent)]
    Io(#[from] ReviewError),
}

/// Correct word sequence per utterance id.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GoldAnnotation {
    pub words: BTreeMap<String, Vec<Word>>,
}

#[derive(Serialize, Deserialize)]
struct GoldLine {
    id: String,
    words: Vec<String>,
}

impl GoldAnnotation {
    pub fn insert(&mut self, id: impl Into<String>, words: Vec<Word>) {
        self.words.insert(id.into(), words);
    }

    pub fn get(&self, id: &str) -> Option<&[Word]> {
        self.words.get(id).map(Vec::as_slice)
    }

    /// Reads gold JSONL (`{"id", "words": [...]}` per line). Words are
    /// normalized with the plain cleaning rule.
    pub fn load(path: &Path) -> Result<Self, EvalError> {
        let lines: Vec<GoldLine> = read_jsonl(path)?;
        let mut gold = GoldAnnotation::default();
        for line in lines {
            let words = clean_text(&line.words.join(" "), CleanOptions::default());
            gold.insert(line.id, words);
        }
        Ok(gold)
    }

    pub fn write(&self, path: &Path) -> Result<(), EvalError> {
        let lines: Vec<GoldLine> = self
            .words
            .iter()
            .map(|(id, ws)| GoldLine {
                id: id.clone(),
                words: ws.iter().map(|w| w.as_str().to_string()).collect(),
            })
            .collect();
        Ok(write_jsonl(path, &lines)?)
    }
}

/// `errors` out of `total`, with `rate = errors / total` (0 when empty).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorRate<S> {
    pub total: usize,
    pub errors: usize,
    pub rate: S,
}

impl<S: Scalar> ErrorRate<S> {
    pub fn new(total: usize, errors: usize) -> Self {
        let rate = if total == 0 {
            S::zero()
        } else {
            S::from_counts(errors as u64, total as u64)
        };
        ErrorRate { total, errors, rate }
    }

    pub fn percent(&self) -> f64 {
        self.rate.as_f64() * 100.0
    }
}

impl<S: Scalar> fmt::Display for ErrorRate<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({:.2}%)", self.errors, self.percent())
    }
}

fn gold_for<'g>(gold: &'g GoldAnnotation, id: &str) -> Result<&'g [Word], EvalError> {
    gold.get(id).ok_or_else(|| EvalError::MissingGold(id.to_string()))
}

/// An emitted utterance is wrong iff its transcript differs from gold.
pub fn au_error<S: Scalar>(emitted: &[SegmentRecord], gold: &GoldAnnotation) -> Result<ErrorRate<S>, EvalError> {
    let mut errors = 0;
    for r in emitted {
        if gold_for(gold, &r.id)? != r.transcript.as_slice() {
            errors += 1;
        }
    }
    Ok(ErrorRate::new(emitted.len(), errors))
}

/// Word errors are the edit distance between gold and the emitted transcript,
/// summed over utterances, out of the total emitted transcript words.
pub fn aw_error<S: Scalar>(emitted: &[SegmentRecord], gold: &GoldAnnotation) -> Result<ErrorRate<S>, EvalError> {
    let mut words = 0;
    let mut errors = 0;
    for r in emitted {
        errors += dis(gold_for(gold, &r.id)?, &r.transcript);
        words += r.transcript.len();
    }
    Ok(ErrorRate::new(words, errors))
}

/// Per-utterance mismatch listing, for reports.
pub fn mismatches(emitted: &[SegmentRecord], gold: &GoldAnnotation) -> Vec<(String, String, String)> {
    emitted
        .iter()
        .filter_map(|r| {
            let g = gold.get(&r.id)?;
            (g != r.transcript.as_slice()).then(|| (r.id.clone(), join_words(g), join_words(&r.transcript)))
        })
        .collect()
}
