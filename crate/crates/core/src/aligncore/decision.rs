use std::ops::{Range, RangeInclusive};

use thiserror::Error;

use super::distance::Wer;
use crate::num::Scalar;
use crate::transcript::Word;

#[derive(Debug, Error, PartialEq)]
pub enum ThresholdError {
    #[error("thresholds must satisfy 0 <= sigma_a < sigma_i <= 1 (got sigma_a={sigma_a}, sigma_i={sigma_i})")]
    Order { sigma_a: f64, sigma_i: f64 },
    #[error("pgc_rel must be in (0, 1] (got {0})")]
    PgcRel(f64),
    #[error("len_ratio_rho must be positive (got {0})")]
    Rho(f64),
    #[error("threshold value {0} is not representable")]
    NotRepresentable(f64),
}

/// Which window lengths the search considers for an utterance of `L` words.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum WindowPolicy {
    /// Lengths `1..=ceil(rho * L)`.
    #[default]
    Extended,
    /// Lengths `2..=ceil(rho * L)`, as in the original pseudocode. Single-word
    /// utterances get no candidate window and are discarded.
    PaperStrict,
}

/// How post-generation checking measures the length mismatch.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PgcMode {
    /// `|len(pred2) - len(gt)| / max(len(gt), 1) > pgc_rel` drops the item.
    #[default]
    Relative,
    /// `|len(pred2) - len(gt)| > max_words` drops the item.
    Absolute { max_words: usize },
}

/// Alignment, inclusion and PGC thresholds plus the window-length policy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Thresholds<S> {
    pub sigma_a: S,
    pub sigma_i: S,
    pub pgc_rel: S,
    pub len_ratio_rho: S,
    pub windows: WindowPolicy,
    pub pgc_mode: PgcMode,
}

pub const DEFAULT_SIGMA_A: f64 = 0.15;
pub const DEFAULT_SIGMA_I: f64 = 0.5;
pub const DEFAULT_PGC_REL: f64 = 0.2;
pub const DEFAULT_RHO: f64 = 1.0;

impl<S: Scalar> Default for Thresholds<S> {
    fn default() -> Self {
        Thresholds::from_f64(DEFAULT_SIGMA_A, DEFAULT_SIGMA_I, DEFAULT_PGC_REL, DEFAULT_RHO)
            .expect("defaults are valid")
    }
}

impl<S: Scalar> Thresholds<S> {
    /// Builds and validates thresholds from `f64` values.
    pub fn from_f64(sigma_a: f64, sigma_i: f64, pgc_rel: f64, rho: f64) -> Result<Self, ThresholdError> {
        let conv = |v: f64| S::from_f64_lossy(v).ok_or(ThresholdError::NotRepresentable(v));
        let th = Thresholds {
            sigma_a: conv(sigma_a)?,
            sigma_i: conv(sigma_i)?,
            pgc_rel: conv(pgc_rel)?,
            len_ratio_rho: conv(rho)?,
            windows: WindowPolicy::default(),
            pgc_mode: PgcMode::default(),
        };
        th.validate()?;
        Ok(th)
    }

    pub fn validate(&self) -> Result<(), ThresholdError> {
        let one = S::one();
        if self.sigma_a.is_negative() || !(self.sigma_a < self.sigma_i) || self.sigma_i > one {
            return Err(ThresholdError::Order {
                sigma_a: self.sigma_a.as_f64(),
                sigma_i: self.sigma_i.as_f64(),
            });
        }
        if !(self.pgc_rel > S::zero()) || self.pgc_rel > one {
            return Err(ThresholdError::PgcRel(self.pgc_rel.as_f64()));
        }
        if !(self.len_ratio_rho > S::zero()) {
            return Err(ThresholdError::Rho(self.len_ratio_rho.as_f64()));
        }
        Ok(())
    }

    pub fn with_windows(mut self, windows: WindowPolicy) -> Self {
        self.windows = windows;
        self
    }

    pub fn with_pgc_mode(mut self, mode: PgcMode) -> Self {
        self.pgc_mode = mode;
        self
    }

    /// Admissible window lengths for an utterance of `pred_len` words.
    /// Lengths beyond the remaining transcript are cut per anchor.
    pub fn window_lengths(&self, pred_len: usize) -> RangeInclusive<usize> {
        let cap = self.len_ratio_rho.ceil_mul(pred_len);
        let min = match self.windows {
            WindowPolicy::Extended => 1,
            WindowPolicy::PaperStrict => 2,
        };
        min..=cap
    }

    pub fn classify(&self, wer: Wer) -> DecisionKind {
        if wer.below(self.sigma_a) {
            DecisionKind::Align
        } else if wer.below(self.sigma_i) {
            DecisionKind::Verify
        } else {
            DecisionKind::Discard
        }
    }

    /// Whether PGC drops an item with `gt_len` aligned words and a second-round
    /// prediction of `pred_len` words.
    pub fn pgc_rejects(&self, gt_len: usize, pred_len: usize) -> bool {
        let diff = gt_len.abs_diff(pred_len);
        match self.pgc_mode {
            PgcMode::Relative => S::from_counts(diff as u64, gt_len.max(1) as u64) > self.pgc_rel,
            PgcMode::Absolute { max_words } => diff > max_words,
        }
    }

    pub fn to_f64(&self) -> Thresholds<f64> {
        Thresholds {
            sigma_a: self.sigma_a.as_f64(),
            sigma_i: self.sigma_i.as_f64(),
            pgc_rel: self.pgc_rel.as_f64(),
            len_ratio_rho: self.len_ratio_rho.as_f64(),
            windows: self.windows,
            pgc_mode: self.pgc_mode,
        }
    }
}

/// The best transcript window for one utterance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MatchResult {
    /// 1-based index of the first window word in the transcript.
    pub best_start: usize,
    pub best_len: usize,
    pub d_min: usize,
    /// WER with the window as reference and the prediction as hypothesis.
    pub wer: Wer,
}

impl MatchResult {
    /// 0-based word range of the window.
    pub fn range(&self) -> Range<usize> {
        self.best_start - 1..self.best_start - 1 + self.best_len
    }

    /// 1-based inclusive index of the last window word.
    pub fn best_end(&self) -> usize {
        self.best_start + self.best_len - 1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DecisionKind {
    Align,
    Verify,
    Discard,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Align { gt: Vec<Word> },
    Verify { gt: Vec<Word>, pred: Vec<Word> },
    Discard,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlignmentDecision {
    pub verdict: Verdict,
    /// `None` only when no candidate window exists.
    pub matched: Option<MatchResult>,
}

impl AlignmentDecision {
    pub fn no_candidate() -> Self {
        AlignmentDecision {
            verdict: Verdict::Discard,
            matched: None,
        }
    }

    pub fn kind(&self) -> DecisionKind {
        match self.verdict {
            Verdict::Align { .. } => DecisionKind::Align,
            Verdict::Verify { .. } => DecisionKind::Verify,
            Verdict::Discard => DecisionKind::Discard,
        }
    }

    pub fn gt(&self) -> Option<&[Word]> {
        match &self.verdict {
            Verdict::Align { gt } | Verdict::Verify { gt, .. } => Some(gt),
            Verdict::Discard => None,
        }
    }

    pub(crate) fn from_match<S: Scalar>(
        matched: MatchResult,
        transcript: &[Word],
        pred: &[Word],
        th: &Thresholds<S>,
    ) -> Self {
        let gt = || transcript[matched.range()].to_vec();
        let verdict = match th.classify(matched.wer) {
            DecisionKind::Align => Verdict::Align { gt: gt() },
            DecisionKind::Verify => Verdict::Verify {
                gt: gt(),
                pred: pred.to_vec(),
            },
            DecisionKind::Discard => Verdict::Discard,
        };
        AlignmentDecision {
            verdict,
            matched: Some(matched),
        }
    }
}
