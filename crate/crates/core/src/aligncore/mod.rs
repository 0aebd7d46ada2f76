//! Word-level alignment of ASR predictions against a provided transcript.
//!
//! Each utterance is matched independently against every contiguous window
//! of the transcript; the closest window becomes its ground truth when the
//! WER falls below the alignment threshold, is queued for review between the
//! two thresholds, and is discarded otherwise.

mod decision;
mod distance;
mod search;

use rayon::prelude::*;

pub use decision::{
    AlignmentDecision, DecisionKind, MatchResult, PgcMode, ThresholdError, Thresholds, Verdict, WindowPolicy,
    DEFAULT_PGC_REL, DEFAULT_RHO, DEFAULT_SIGMA_A, DEFAULT_SIGMA_I,
};
pub use distance::{dis, wer, Wer};
pub use search::{best_match, best_match_fast, Matcher};

use crate::hypothesis::{HypothesisSet, Utterance};
use crate::num::Scalar;
use crate::transcript::{ProvidedTranscript, Word};

#[derive(Clone, Debug, PartialEq)]
pub struct AlignedItem {
    pub utterance: Utterance,
    pub gt: Vec<Word>,
    pub matched: MatchResult,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyCandidate {
    pub utterance: Utterance,
    pub gt: Vec<Word>,
    pub pred: Vec<Word>,
    pub matched: MatchResult,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiscardedItem {
    pub utterance: Utterance,
    pub matched: Option<MatchResult>,
}

/// Per-utterance outcomes, each list in input order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Alignment {
    pub aligned: Vec<AlignedItem>,
    pub verify: Vec<VerifyCandidate>,
    pub discarded: Vec<DiscardedItem>,
}

impl Alignment {
    pub fn total(&self) -> usize {
        self.aligned.len() + self.verify.len() + self.discarded.len()
    }
}

/// Classifies every utterance against the transcript.
///
/// Utterances are independent: windows may be reused and no ordering between
/// utterances is assumed. Work is spread over the current rayon pool and
/// merged in input order.
pub fn align_all<S: Scalar>(utterances: &[Utterance], transcript: &ProvidedTranscript, th: &Thresholds<S>) -> Alignment {
    let matcher = Matcher::new(transcript);
    let decisions: Vec<AlignmentDecision> = utterances
        .par_iter()
        .map(|u| matcher.best_match(&u.pred_words, th))
        .collect();

    let mut out = Alignment::default();
    for (u, decision) in utterances.iter().zip(decisions) {
        let utterance = u.clone();
        match (decision.verdict, decision.matched) {
            (Verdict::Align { gt }, Some(matched)) => out.aligned.push(AlignedItem { utterance, gt, matched }),
            (Verdict::Verify { gt, pred }, Some(matched)) => out.verify.push(VerifyCandidate {
                utterance,
                gt,
                pred,
                matched,
            }),
            (_, matched) => out.discarded.push(DiscardedItem { utterance, matched }),
        }
    }
    out
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PgcOutcome {
    pub kept: Vec<AlignedItem>,
    /// Dropped items with the length of their second-round prediction.
    pub dropped: Vec<(AlignedItem, usize)>,
    /// Ids with no second-round prediction; those items were kept.
    pub missing: Vec<String>,
}

/// Post-generation check: drops aligned items whose second-round prediction
/// length deviates too far from the aligned transcript length.
pub fn pgc_filter<S: Scalar>(aligned: Vec<AlignedItem>, second_round: &HypothesisSet, th: &Thresholds<S>) -> PgcOutcome {
    let by_id: std::collections::HashMap<&str, &Utterance> =
        second_round.utterances.iter().map(|u| (u.id.as_str(), u)).collect();
    let mut out = PgcOutcome::default();
    for item in aligned {
        match by_id.get(item.utterance.id.as_str()) {
            None => {
                log::warn!("PGC: no second-round prediction for {}, keeping it", item.utterance.id);
                out.missing.push(item.utterance.id.clone());
                out.kept.push(item);
            }
            Some(second) => {
                let pred_len = second.pred_words.len();
                if th.pgc_rejects(item.gt.len(), pred_len) {
                    out.dropped.push((item, pred_len));
                } else {
                    out.kept.push(item);
                }
            }
        }
    }
    out
}
