//! Emitted dataset: cut audio segments, manifests, and merging of review
//! decisions into the final manifest.

mod manifest;
pub mod wav;

use std::collections::HashMap;

use thiserror::Error;

pub use manifest::{
    emit_manifest, load_manifest, load_records, load_speaker_meta, sidecar_path, DatasetError, Manifest,
    RecordSource, SegmentRecord, SpeakerMeta,
};
pub use wav::{cut_segment, AudioError, PcmAudio, SAMPLE_RATE};

use crate::review::{ReviewError, VerifyAction, VerifyDecision, VerifyItem};

#[derive(Debug, Error)]
pub enum MergeError {
    #[error("decision refers to unknown item {0:?}")]
    UnknownId(String),
    #[error("item {0:?} has more than one decision")]
    DuplicateDecision(String),
    #[error(transparent)]
    Review(#[from] ReviewError),
}

/// Appends reviewed items to the automatically aligned manifest.
///
/// Auto records are copied untouched. Accepted items are appended in queue
/// order, so the result does not depend on the order of `decisions`.
pub fn merge_decisions(
    auto_aligned: &Manifest,
    queue: &[VerifyItem],
    decisions: &[VerifyDecision],
) -> Result<Manifest, MergeError> {
    let mut by_id: HashMap<&str, &VerifyDecision> = HashMap::new();
    for d in decisions {
        if !queue.iter().any(|item| item.id == d.item_id) {
            return Err(MergeError::UnknownId(d.item_id.clone()));
        }
        if by_id.insert(d.item_id.as_str(), d).is_some() {
            return Err(MergeError::DuplicateDecision(d.item_id.clone()));
        }
    }

    let mut out = auto_aligned.clone();
    for item in queue {
        let Some(decision) = by_id.get(item.id.as_str()) else {
            continue;
        };
        let (transcript, source) = match decision.action {
            VerifyAction::Reject => continue,
            VerifyAction::AcceptGt => (item.gt.clone(), RecordSource::UserSelected),
            VerifyAction::AcceptPred => (item.pred.clone(), RecordSource::UserSelected),
            VerifyAction::Manual => (decision.manual_words()?, RecordSource::UserManual),
        };
        out.records.push(SegmentRecord {
            id: item.id.clone(),
            audio_path: item.audio.clone(),
            source_audio: item.source_audio.clone(),
            start_s: item.start_s,
            end_s: item.end_s,
            transcript,
            source,
            speaker_meta: item.speaker.clone(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aligncore::Thresholds;
    use crate::transcript::words;

    fn item(id: &str, gt: &str, pred: &str) -> VerifyItem {
        VerifyItem {
            id: id.into(),
            audio: format!("verify_segments/{id}.wav").into(),
            source_audio: "story.wav".into(),
            start_s: 0.0,
            end_s: 1.0,
            gt: words(gt),
            pred: words(pred),
            wer: 0.3,
            speaker: SpeakerMeta::default(),
        }
    }

    fn auto() -> Manifest {
        let mut m = Manifest::new("0.1.0", Thresholds::default(), "asr");
        m.records.push(SegmentRecord {
            id: "a1".into(),
            audio_path: "segments/a1.wav".into(),
            source_audio: "story.wav".into(),
            start_s: 2.0,
            end_s: 3.0,
            transcript: words("once upon a time"),
            source: RecordSource::Auto,
            speaker_meta: SpeakerMeta::default(),
        });
        m
    }

    fn queue() -> Vec<VerifyItem> {
        vec![
            item("v1", "the frog", "the fog"),
            item("v2", "jumped out", "jump out"),
            item("v3", "of the jar", "of a jar"),
        ]
    }

    #[test]
    fn reject_all_is_identity() {
        let ds: Vec<_> = queue().iter().map(|i| VerifyDecision::new(&i.id, VerifyAction::Reject)).collect();
        assert_eq!(merge_decisions(&auto(), &queue(), &ds).unwrap(), auto());
        assert_eq!(merge_decisions(&auto(), &queue(), &[]).unwrap(), auto());
    }

    #[test]
    fn accept_variants() {
        let ds = vec![
            VerifyDecision::manual("v3", "The Frog!"),
            VerifyDecision::new("v1", VerifyAction::AcceptGt),
            VerifyDecision::new("v2", VerifyAction::AcceptPred),
        ];
        let out = merge_decisions(&auto(), &queue(), &ds).unwrap();
        assert_eq!(out.records.len(), 4);
        assert_eq!(out.records[0], auto().records[0]);
        let tail: Vec<_> = out.records[1..]
            .iter()
            .map(|r| (r.id.as_str(), r.transcript.clone(), r.source))
            .collect();
        assert_eq!(
            tail,
            [
                ("v1", words("the frog"), RecordSource::UserSelected),
                ("v2", words("jump out"), RecordSource::UserSelected),
                ("v3", words("the frog"), RecordSource::UserManual),
            ]
        );
    }

    #[test]
    fn order_insensitive_and_idempotent() {
        let mut ds = vec![
            VerifyDecision::new("v1", VerifyAction::AcceptGt),
            VerifyDecision::new("v2", VerifyAction::Reject),
            VerifyDecision::new("v3", VerifyAction::AcceptPred),
        ];
        let a = merge_decisions(&auto(), &queue(), &ds).unwrap();
        assert_eq!(merge_decisions(&auto(), &queue(), &ds).unwrap(), a);
        ds.reverse();
        assert_eq!(merge_decisions(&auto(), &queue(), &ds).unwrap(), a);
    }

    #[test]
    fn errors() {
        let unknown = [VerifyDecision::new("nope", VerifyAction::AcceptGt)];
        assert!(matches!(
            merge_decisions(&auto(), &queue(), &unknown),
            Err(MergeError::UnknownId(id)) if id == "nope"
        ));
        let dup = [
            VerifyDecision::new("v1", VerifyAction::AcceptGt),
            VerifyDecision::new("v1", VerifyAction::Reject),
        ];
        assert!(matches!(
            merge_decisions(&auto(), &queue(), &dup),
            Err(MergeError::DuplicateDecision(_))
        ));
    }
}
