//! Property tests. Oracles are written out naively here so the library is
//! checked against something independent of its own implementation.

use std::collections::HashMap;

use fasa_core::aligncore::{
    align_all, best_match, best_match_fast, dis, wer, DecisionKind, Thresholds, Verdict, WindowPolicy,
};
use fasa_core::hypothesis::{emit_hypotheses, parse_hypotheses, HypothesisSet, SchemaLimits, Utterance};
use fasa_core::transcript::{clean, clean_text, join_words, CleanOptions, FormatHint, ProvidedTranscript, RawTranscript, Word};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Textbook full-matrix Levenshtein recurrence.
fn dis_oracle(x: &[Word], y: &[Word]) -> usize {
    let mut d = vec![vec![0usize; y.len() + 1]; x.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=y.len() {
        d[0][j] = j;
    }
    for i in 1..=x.len() {
        for j in 1..=y.len() {
            let sub = d[i - 1][j - 1] + usize::from(x[i - 1] != y[j - 1]);
            d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    d[x.len()][y.len()]
}

fn vocab_word(vocab: usize) -> impl Strategy<Value = Word> {
    (0..vocab).prop_map(|i| Word::new(format!("w{i}")))
}

fn seq(vocab: usize, max_len: usize) -> impl Strategy<Value = Vec<Word>> {
    prop::collection::vec(vocab_word(vocab), 0..=max_len)
}

fn utterance(id: String, pred: Vec<Word>, start_s: f64) -> Utterance {
    Utterance {
        id,
        audio_path: "story.wav".into(),
        start_s,
        end_s: start_s + 1.0,
        pred_text_raw: join_words(&pred),
        pred_words: pred,
        timed_words: None,
    }
}

fn thresholds() -> impl Strategy<Value = Thresholds<f64>> {
    (0u32..=100, 0u32..=100, 50u32..=150, any::<bool>()).prop_filter_map("sigma_a < sigma_i", |(a, i, rho, strict)| {
        let th = Thresholds::<f64>::from_f64(a as f64 / 100.0, i as f64 / 100.0, 0.2, rho as f64 / 100.0).ok()?;
        Some(th.with_windows(if strict { WindowPolicy::PaperStrict } else { WindowPolicy::Extended }))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn dis_matches_oracle(x in seq(6, 15), y in seq(6, 15)) {
        prop_assert_eq!(dis(&x, &y), dis_oracle(&x, &y));
    }

    #[test]
    fn dis_is_a_metric(x in seq(5, 12), y in seq(5, 12), z in seq(5, 12)) {
        prop_assert_eq!(dis(&x, &x), 0);
        prop_assert_eq!(dis(&x, &y), dis(&y, &x));
        prop_assert!(dis(&x, &z) <= dis(&x, &y) + dis(&y, &z));
        if dis(&x, &y) == 0 {
            prop_assert_eq!(&x, &y);
        }
        let d = dis(&x, &y);
        prop_assert!(d >= x.len().abs_diff(y.len()));
        prop_assert!(d <= x.len().max(y.len()));
    }

    #[test]
    fn fast_search_equals_exhaustive(
        t in seq(50, 200),
        pred in prop::collection::vec(vocab_word(50), 1..=20),
        th in thresholds(),
    ) {
        let t = ProvidedTranscript::from_words(t);
        prop_assert_eq!(best_match_fast(&pred, &t, &th), best_match(&pred, &t, &th));
    }

    // Substring-heavy instances, where ties and d = 0 exits are common.
    #[test]
    fn fast_search_equals_exhaustive_on_planted_windows(
        t in prop::collection::vec(vocab_word(8), 1..=120),
        start in any::<prop::sample::Index>(),
        len in 1usize..=15,
        edits in prop::collection::vec((any::<prop::sample::Index>(), vocab_word(8)), 0..4),
    ) {
        let a = start.index(t.len());
        let mut pred: Vec<Word> = t[a..(a + len).min(t.len())].to_vec();
        for (at, w) in edits {
            let i = at.index(pred.len());
            pred[i] = w;
        }
        let t = ProvidedTranscript::from_words(t);
        let th = Thresholds::<f64>::default();
        prop_assert_eq!(best_match_fast(&pred, &t, &th), best_match(&pred, &t, &th));
    }

    #[test]
    fn decisions_are_consistent(t in seq(10, 80), pred in seq(10, 12), th in thresholds()) {
        let t = ProvidedTranscript::from_words(t);
        let decision = best_match_fast(&pred, &t, &th);
        let Some(m) = decision.matched else {
            prop_assert_eq!(decision.kind(), DecisionKind::Discard);
            return Ok(());
        };
        let range = m.range();
        prop_assert!(m.best_start >= 1 && m.best_end() <= t.len());
        let window = &t.words[range.clone()];
        prop_assert_eq!(m.d_min, dis(&pred, window));
        prop_assert_eq!(m.wer, wer(window, &pred));
        // exactly one class, consistent with the wer
        let w = m.wer.as_f64();
        let expected = if w < th.sigma_a {
            DecisionKind::Align
        } else if w < th.sigma_i {
            DecisionKind::Verify
        } else {
            DecisionKind::Discard
        };
        prop_assert_eq!(decision.kind(), expected);
        match &decision.verdict {
            Verdict::Align { gt } | Verdict::Verify { gt, .. } => {
                prop_assert_eq!(gt.as_slice(), window);
                // the span of the slice covers exactly those words
                let joined = join_words(&t.words);
                let text = &joined[t.spans[range.start].start..t.spans[range.end - 1].end];
                prop_assert_eq!(text, join_words(gt));
            }
            Verdict::Discard => {}
        }
    }

    #[test]
    fn translation_invariance(
        t in prop::collection::vec(vocab_word(20), 1..=60),
        pred in prop::collection::vec(vocab_word(20), 1..=10),
        k in 1usize..=10,
    ) {
        let th = Thresholds::<f64>::default();
        let base = best_match(&pred, &ProvidedTranscript::from_words(t.clone()), &th);
        let Some(m) = base.matched else { return Ok(()); };

        let mut shifted: Vec<Word> = (0..k).map(|i| Word::new(format!("pre{i}"))).collect();
        shifted.extend(t.iter().cloned());
        let lengths = th.window_lengths(pred.len());
        let n = shifted.len();
        let touching_min = (0..k)
            .flat_map(|a| lengths.clone().filter(move |w| a + w <= n).map(move |w| (a, w)))
            .map(|(a, w)| dis(&pred, &shifted[a..a + w]))
            .min()
            .unwrap_or(usize::MAX);
        prop_assume!(m.d_min < touching_min);

        let moved = best_match_fast(&pred, &ProvidedTranscript::from_words(shifted), &th);
        let mm = moved.matched.unwrap();
        prop_assert_eq!(mm.best_start, m.best_start + k);
        prop_assert_eq!((mm.best_len, mm.d_min, mm.wer), (m.best_len, m.d_min, m.wer));
        prop_assert_eq!(moved.verdict, base.verdict);
    }

    #[test]
    fn align_all_is_permutation_robust(
        t in seq(12, 100),
        preds in prop::collection::vec(seq(12, 10), 0..20),
        perm_seed in any::<u64>(),
    ) {
        let t = ProvidedTranscript::from_words(t);
        let us: Vec<Utterance> = preds
            .into_iter()
            .enumerate()
            .map(|(i, p)| utterance(format!("u{i}"), p, i as f64 * 2.0))
            .collect();
        let mut shuffled = us.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(perm_seed));
        let th = Thresholds::<f64>::default();
        let a = align_all(&us, &t, &th);
        let b = align_all(&shuffled, &t, &th);
        prop_assert_eq!(a.total(), us.len());

        let index = |al: &fasa_core::aligncore::Alignment| {
            let mut m: HashMap<String, (DecisionKind, Option<(usize, usize, usize)>)> = HashMap::new();
            for x in &al.aligned {
                m.insert(x.utterance.id.clone(), (DecisionKind::Align, Some((x.matched.best_start, x.matched.best_len, x.matched.d_min))));
            }
            for x in &al.verify {
                m.insert(x.utterance.id.clone(), (DecisionKind::Verify, Some((x.matched.best_start, x.matched.best_len, x.matched.d_min))));
            }
            for x in &al.discarded {
                m.insert(x.utterance.id.clone(), (DecisionKind::Discard, x.matched.map(|m| (m.best_start, m.best_len, m.d_min))));
            }
            m
        };
        prop_assert_eq!(index(&a), index(&b));
        // within each class, outputs follow input order
        let order: Vec<&str> = shuffled.iter().map(|u| u.id.as_str()).collect();
        let pos = |id: &str| order.iter().position(|o| *o == id).unwrap();
        let ids: Vec<usize> = b.aligned.iter().map(|x| pos(&x.utterance.id)).collect();
        prop_assert!(ids.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn cleaning_is_idempotent(text in "[a-zA-Z0-9 '’.,!?;:\\-—()\"\\n\\t]{0,80}", keep in any::<bool>()) {
        let opts = CleanOptions { keep_apostrophes: keep };
        let once = clean_text(&text, opts);
        prop_assert_eq!(clean_text(&join_words(&once), opts), once.clone());
        for w in &once {
            let s = w.as_str();
            prop_assert!(!s.is_empty());
            prop_assert!(s.chars().all(|c| (c.is_alphanumeric() && !c.is_uppercase()) || c == '\''));
            prop_assert!(!s.starts_with('\'') && !s.ends_with('\''));
        }
    }

    #[test]
    fn cleaning_keeps_provenance(text in "[a-zA-ZÀ-ÿ0-9 '’.,!?\\-—\\[\\]<>\\n]{0,80}") {
        let raw = RawTranscript::new("t.txt", text.clone(), FormatHint::Plain);
        let t = clean(&raw, CleanOptions::default()).unwrap();
        prop_assert_eq!(t.words.len(), t.spans.len());
        let mut last_end = 0;
        for (w, span) in t.words.iter().zip(&t.spans) {
            prop_assert!(span.start >= last_end && span.start < span.end);
            last_end = span.end;
            prop_assert_eq!(clean_text(&text[span.clone()], CleanOptions::default()), vec![w.clone()]);
        }
    }

    #[test]
    fn chat_provenance(lines in prop::collection::vec(("[A-Z]{3}", "[a-zA-Z ,.'\\[\\]/*]{0,30}"), 0..6)) {
        let mut text = String::from("@Begin\n");
        for (spk, body) in &lines {
            text.push_str(&format!("*{spk}:\t{body}\n%mor:\tn|x\n"));
        }
        let raw = RawTranscript::new("t.cha", text.clone(), FormatHint::Chat);
        let t = clean(&raw, CleanOptions::default()).unwrap();
        for (w, span) in t.words.iter().zip(&t.spans) {
            prop_assert_eq!(clean_text(&text[span.clone()], CleanOptions::default()), vec![w.clone()]);
        }
    }

    #[test]
    fn hypotheses_round_trip(
        files in prop::collection::vec(
            prop::collection::vec(("[a-zA-Z ,.']{1,30}", 1u32..=40, 0u32..=8), 1..6),
            1..4,
        ),
        with_times in any::<bool>(),
    ) {
        let mut utterances = Vec::new();
        for (f, segs) in files.iter().enumerate() {
            let mut cursor = 0.0;
            for (k, (text, dur, gap)) in segs.iter().enumerate() {
                let start_s = cursor + *gap as f64 * 0.125;
                let end_s = start_s + *dur as f64 * 0.125;
                cursor = end_s;
                let pred_words = clean_text(text, CleanOptions::default());
                let timed_words = with_times.then(|| {
                    pred_words
                        .iter()
                        .map(|w| fasa_core::hypothesis::TimedWord { w: w.as_str().to_string(), start_s, end_s })
                        .collect()
                });
                utterances.push(Utterance {
                    id: format!("f{f}_{k}"),
                    audio_path: format!("rec{f}.wav").into(),
                    start_s,
                    end_s,
                    pred_words,
                    pred_text_raw: text.clone(),
                    timed_words,
                });
            }
        }
        let hs = HypothesisSet { asr_id: "test-asr".into(), utterances };
        let back = parse_hypotheses(&emit_hypotheses(&hs), SchemaLimits::default()).unwrap();
        prop_assert_eq!(back, hs);
    }
}
