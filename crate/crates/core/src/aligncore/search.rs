//! Sliding-window search for the transcript span closest to a prediction.
//!
//! [`best_match`] enumerates every admissible window and computes each
//! distance from scratch. [`Matcher`] returns the identical result with one
//! DP table per anchor plus lower-bound pruning; it is what the pipeline uses.

use std::collections::HashMap;

use super::decision::{AlignmentDecision, MatchResult, Thresholds};
use super::distance::{dis, wer};
use crate::num::Scalar;
use crate::transcript::{ProvidedTranscript, Word};

/// Exhaustive search: anchors ascending, lengths ascending, strict `<`.
pub fn best_match<S: Scalar>(pred: &[Word], transcript: &ProvidedTranscript, th: &Thresholds<S>) -> AlignmentDecision {
    let t = &transcript.words;
    let m = t.len();
    if pred.is_empty() || m == 0 {
        return AlignmentDecision::no_candidate();
    }
    let lengths = th.window_lengths(pred.len());
    let mut best: Option<(usize, usize, usize)> = None;
    for a in 0..m {
        for w in lengths.clone() {
            if a + w > m {
                break;
            }
            let d = dis(pred, &t[a..a + w]);
            if best.map_or(true, |(_, _, d_min)| d < d_min) {
                best = Some((a, w, d));
            }
        }
    }
    decide(best, pred, t, th)
}

/// Same result as [`best_match`], built from a [`Matcher`] for one call.
pub fn best_match_fast<S: Scalar>(
    pred: &[Word],
    transcript: &ProvidedTranscript,
    th: &Thresholds<S>,
) -> AlignmentDecision {
    Matcher::new(transcript).best_match(pred, th)
}

fn decide<S: Scalar>(
    best: Option<(usize, usize, usize)>,
    pred: &[Word],
    t: &[Word],
    th: &Thresholds<S>,
) -> AlignmentDecision {
    let Some((a, w, d_min)) = best else {
        return AlignmentDecision::no_candidate();
    };
    let matched = MatchResult {
        best_start: a + 1,
        best_len: w,
        d_min,
        wer: wer(&t[a..a + w], pred),
    };
    AlignmentDecision::from_match(matched, t, pred, th)
}

const NO_WORD: u32 = u32::MAX;

/// A transcript prepared for repeated searches: words interned to ids and an
/// inverted index from id to positions.
pub struct Matcher<'t> {
    transcript: &'t ProvidedTranscript,
    ids: HashMap<&'t str, u32>,
    positions: Vec<Vec<u32>>,
}

impl<'t> Matcher<'t> {
    pub fn new(transcript: &'t ProvidedTranscript) -> Self {
        let mut ids: HashMap<&str, u32> = HashMap::new();
        let mut positions: Vec<Vec<u32>> = Vec::new();
        for (pos, w) in transcript.words.iter().enumerate() {
            let next = positions.len() as u32;
            let id = *ids.entry(w.as_str()).or_insert(next);
            if id == next {
                positions.push(Vec::new());
            }
            positions[id as usize].push(pos as u32);
        }
        Matcher {
            transcript,
            ids,
            positions,
        }
    }

    pub fn transcript(&self) -> &'t ProvidedTranscript {
        self.transcript
    }

    pub fn best_match<S: Scalar>(&self, pred: &[Word], th: &Thresholds<S>) -> AlignmentDecision {
        let t = &self.transcript.words;
        let m = t.len();
        let l = pred.len();
        if l == 0 || m == 0 {
            return AlignmentDecision::no_candidate();
        }
        let lengths = th.window_lengths(l);
        let (min_len, cap) = (*lengths.start(), *lengths.end());
        if min_len > cap || min_len > m {
            return AlignmentDecision::no_candidate();
        }

        // Distinct prediction words get local ids 0..k; transcript positions
        // holding one of them are tagged through the inverted index. Words
        // absent from the transcript keep a local id that no position carries.
        let mut local_of: HashMap<&str, u32> = HashMap::new();
        let mut need: Vec<u32> = Vec::new();
        let pred_local: Vec<u32> = pred
            .iter()
            .map(|w| {
                let next = need.len() as u32;
                let id = *local_of.entry(w.as_str()).or_insert(next);
                if id == next {
                    need.push(0);
                }
                need[id as usize] += 1;
                id
            })
            .collect();
        let mut t_local = vec![NO_WORD; m];
        for (word, &local) in &local_of {
            if let Some(&id) = self.ids.get(word) {
                for &pos in &self.positions[id as usize] {
                    t_local[pos as usize] = local;
                }
            }
        }

        let lower = anchor_lower_bounds(&t_local, &need, l, cap);

        let mut search = AnchorSearch::new(&pred_local, &t_local, min_len, cap);

        // A few promising anchors first, to get a tight upper bound on the
        // optimum before the ordered scan.
        let mut probe: Vec<usize> = (0..m).filter(|&a| m - a >= min_len).collect();
        let probe_len = probe.len().min(4);
        if probe_len > 0 {
            probe.select_nth_unstable_by_key(probe_len - 1, |&a| (lower[a], a));
        }
        let mut upper = usize::MAX;
        for &a in &probe[..probe_len] {
            if let Some((_, d)) = search.best_at(a, usize::MAX) {
                upper = upper.min(d);
            }
        }

        let mut best: Option<(usize, usize, usize)> = None;
        for a in 0..m {
            if m - a < min_len {
                break;
            }
            let d_min = best.map_or(usize::MAX, |b| b.2);
            if lower[a] > upper || lower[a] >= d_min {
                continue;
            }
            if let Some((w, d)) = search.best_at(a, d_min) {
                best = Some((a, w, d));
                if d == 0 {
                    break;
                }
            }
        }
        decide(best, pred, t, th)
    }
}

/// For each anchor `a`, `L - common(a)` where `common(a)` is the multiset
/// overlap between the prediction and `T[a .. a+cap]`. No window starting at
/// `a` can be closer than this, since edit distance is at least
/// `max(L, w) - matches`.
fn anchor_lower_bounds(t_local: &[u32], need: &[u32], l: usize, cap: usize) -> Vec<usize> {
    let m = t_local.len();
    let mut have = vec![0u32; need.len()];
    let mut common = 0usize;
    let add = |have: &mut [u32], common: &mut usize, id: u32| {
        if id != NO_WORD {
            let i = id as usize;
            if have[i] < need[i] {
                *common += 1;
            }
            have[i] += 1;
        }
    };
    let remove = |have: &mut [u32], common: &mut usize, id: u32| {
        if id != NO_WORD {
            let i = id as usize;
            have[i] -= 1;
            if have[i] < need[i] {
                *common -= 1;
            }
        }
    };
    for &id in &t_local[..cap.min(m)] {
        add(&mut have, &mut common, id);
    }
    let mut out = Vec::with_capacity(m);
    for a in 0..m {
        out.push(l - common);
        remove(&mut have, &mut common, t_local[a]);
        if a + cap < m {
            add(&mut have, &mut common, t_local[a + cap]);
        }
    }
    out
}

struct AnchorSearch<'a> {
    pred: &'a [u32],
    t: &'a [u32],
    min_len: usize,
    cap: usize,
    prev: Vec<usize>,
    cur: Vec<usize>,
}

impl<'a> AnchorSearch<'a> {
    fn new(pred: &'a [u32], t: &'a [u32], min_len: usize, cap: usize) -> Self {
        AnchorSearch {
            pred,
            t,
            min_len,
            cap,
            prev: vec![0; pred.len() + 1],
            cur: vec![0; pred.len() + 1],
        }
    }

    /// First (shortest) window at anchor `a` whose distance is strictly below
    /// `bound`, improving on it as longer windows are read off, i.e. the
    /// best window at `a` in ascending-length, strict-`<` order. `None` if no
    /// window at `a` beats `bound`.
    fn best_at(&mut self, a: usize, bound: usize) -> Option<(usize, usize)> {
        let l = self.pred.len();
        let max_len = self.cap.min(self.t.len() - a);
        for (i, v) in self.prev.iter_mut().enumerate() {
            *v = i;
        }
        let mut best: Option<(usize, usize)> = None;
        let mut limit = bound;
        for j in 1..=max_len {
            let tw = self.t[a + j - 1];
            self.cur[0] = j;
            let mut col_min = j;
            for i in 1..=l {
                let sub = self.prev[i - 1] + usize::from(self.pred[i - 1] != tw);
                let v = sub.min(self.prev[i] + 1).min(self.cur[i - 1] + 1);
                self.cur[i] = v;
                col_min = col_min.min(v);
            }
            std::mem::swap(&mut self.prev, &mut self.cur);
            let d = self.prev[l];
            if j >= self.min_len && d < limit {
                best = Some((j, d));
                limit = d;
                if d == 0 {
                    break;
                }
            }
            // every path to a longer window crosses this column
            if col_min >= limit {
                break;
            }
        }
        best
    }
}
