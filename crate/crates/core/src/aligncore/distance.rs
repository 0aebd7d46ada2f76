//! Word-level Levenshtein distance and word error rate.

use std::cmp::Ordering;
use std::fmt;

use crate::num::Scalar;

/// Word-level Levenshtein distance with unit costs.
pub fn dis<T: PartialEq>(x: &[T], y: &[T]) -> usize {
    if x.is_empty() {
        return y.len();
    }
    if y.is_empty() {
        return x.len();
    }
    let mut row: Vec<usize> = (0..=y.len()).collect();
    for (i, xi) in x.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, yj) in y.iter().enumerate() {
            let sub = diag + usize::from(xi != yj);
            diag = row[j + 1];
            row[j + 1] = sub.min(row[j] + 1).min(diag + 1);
        }
    }
    row[y.len()]
}

/// Word error rate as an exact ratio `errors / reference_len`.
///
/// An empty reference with a non-empty hypothesis is infinite, which no
/// threshold accepts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Wer {
    pub errors: usize,
    pub reference_len: usize,
}

impl Wer {
    pub const ZERO: Wer = Wer {
        errors: 0,
        reference_len: 0,
    };

    pub fn is_infinite(&self) -> bool {
        self.reference_len == 0 && self.errors > 0
    }

    /// The rate in scalar `S`, or `None` when infinite.
    pub fn value<S: Scalar>(&self) -> Option<S> {
        match (self.errors, self.reference_len) {
            (_, 0) if self.errors > 0 => None,
            (_, 0) => Some(S::zero()),
            (e, n) => Some(S::from_counts(e as u64, n as u64)),
        }
    }

    pub fn as_f64(&self) -> f64 {
        self.value::<f64>().unwrap_or(f64::INFINITY)
    }

    /// `self < threshold`, evaluated in `S`.
    pub fn below<S: Scalar>(&self, threshold: S) -> bool {
        self.value::<S>().is_some_and(|v| v < threshold)
    }
}

impl PartialOrd for Wer {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Wer {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.is_infinite(), other.is_infinite()) {
            (true, true) => Ordering::Equal,
            (true, false) => Ordering::Greater,
            (false, true) => Ordering::Less,
            (false, false) => {
                // cross-multiply; zero-length references only reach here as 0/0
                let lhs = self.errors as u128 * other.reference_len.max(1) as u128;
                let rhs = other.errors as u128 * self.reference_len.max(1) as u128;
                lhs.cmp(&rhs)
            }
        }
    }
}

impl fmt::Display for Wer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{}/{}", self.errors, self.reference_len)
        }
    }
}

/// WER of `hypothesis` against `reference`.
pub fn wer<T: PartialEq>(reference: &[T], hypothesis: &[T]) -> Wer {
    Wer {
        errors: dis(reference, hypothesis),
        reference_len: reference.len(),
    }
}
