//! ASR predictions for audio segments.
//!
//! Predictions enter the pipeline through a JSON interchange document, either
//! read from a file or written to stdout by an external command. A seeded
//! mock recognizer corrupts known text for tests and synthetic corpora.

use std::collections::HashSet;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::transcript::{clean_text, join_words, CleanOptions, Word};

pub const DEFAULT_MAX_SEGMENT_S: f64 = 30.0;
pub const DEFAULT_OVERLAP_TOL_S: f64 = 0.1;

#[derive(Debug, Error)]
pub enum HypothesisError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("duplicate segment id {0:?}")]
    IdCollision(String),
    #[error("failed to spawn ASR command: {0}")]
    Spawn(#[source] std::io::Error),
    #[error("ASR command exited with code {code}: {stderr}")]
    NonZeroExit { code: i32, stderr: String },
    #[error("ASR command template has no {{audio}} placeholder")]
    MissingPlaceholder,
}

/// Optional word-level timing carried through from the recognizer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimedWord {
    pub w: String,
    pub start_s: f64,
    pub end_s: f64,
}

/// One ASR-delimited audio span with its predicted words.
#[derive(Clone, Debug, PartialEq)]
pub struct Utterance {
    pub id: String,
    pub audio_path: PathBuf,
    pub start_s: f64,
    pub end_s: f64,
    pub pred_words: Vec<Word>,
    pub pred_text_raw: String,
    pub timed_words: Option<Vec<TimedWord>>,
}

impl Utterance {
    pub fn duration_s(&self) -> f64 {
        self.end_s - self.start_s
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HypothesisSet {
    pub asr_id: String,
    pub utterances: Vec<Utterance>,
}

impl HypothesisSet {
    pub fn empty(asr_id: impl Into<String>) -> Self {
        HypothesisSet {
            asr_id: asr_id.into(),
            utterances: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.utterances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.utterances.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Utterance> {
        self.utterances.iter().find(|u| u.id == id)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SchemaLimits {
    pub max_segment_s: f64,
    pub overlap_tol_s: f64,
}

impl Default for SchemaLimits {
    fn default() -> Self {
        SchemaLimits {
            max_segment_s: DEFAULT_MAX_SEGMENT_S,
            overlap_tol_s: DEFAULT_OVERLAP_TOL_S,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    asr_id: String,
    segments: Vec<Segment>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Segment {
    id: String,
    audio: String,
    start_s: f64,
    end_s: f64,
    text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    words: Option<Vec<TimedWord>>,
}

pub fn load_hypotheses(path: &Path) -> Result<HypothesisSet, HypothesisError> {
    let text = std::fs::read_to_string(path).map_err(|source| HypothesisError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_hypotheses(&text, SchemaLimits::default())
}

/// Parses and validates an interchange document.
///
/// Utterances come back grouped by audio file in first-appearance order and
/// sorted by start time within each file.
pub fn parse_hypotheses(text: &str, limits: SchemaLimits) -> Result<HypothesisSet, HypothesisError> {
    let doc: Document = serde_json::from_str(text).map_err(|e| HypothesisError::Schema(e.to_string()))?;
    let mut seen = HashSet::new();
    let mut utterances = Vec::with_capacity(doc.segments.len());
    for seg in doc.segments {
        if !seen.insert(seg.id.clone()) {
            return Err(HypothesisError::IdCollision(seg.id));
        }
        validate_segment(&seg, limits)?;
        utterances.push(Utterance {
            pred_words: clean_text(&seg.text, CleanOptions::default()),
            id: seg.id,
            audio_path: PathBuf::from(seg.audio),
            start_s: seg.start_s,
            end_s: seg.end_s,
            pred_text_raw: seg.text,
            timed_words: seg.words,
        });
    }

    let mut audio_order: Vec<PathBuf> = Vec::new();
    for u in &utterances {
        if !audio_order.contains(&u.audio_path) {
            audio_order.push(u.audio_path.clone());
        }
    }
    utterances.sort_by(|a, b| {
        let ka = audio_order.iter().position(|p| *p == a.audio_path);
        let kb = audio_order.iter().position(|p| *p == b.audio_path);
        ka.cmp(&kb).then(a.start_s.total_cmp(&b.start_s))
    });
    for pair in utterances.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if a.audio_path == b.audio_path && a.end_s - b.start_s > limits.overlap_tol_s {
            return Err(HypothesisError::Schema(format!(
                "segments {:?} and {:?} overlap by {:.3} s",
                a.id,
                b.id,
                a.end_s - b.start_s
            )));
        }
    }
    Ok(HypothesisSet {
        asr_id: doc.asr_id,
        utterances,
    })
}

fn validate_segment(seg: &Segment, limits: SchemaLimits) -> Result<(), HypothesisError> {
    let fail = |msg: &str| Err(HypothesisError::Schema(format!("segment {:?}: {msg}", seg.id)));
    if seg.id.is_empty() {
        return fail("empty id");
    }
    if !seg.start_s.is_finite() || !seg.end_s.is_finite() {
        return fail("non-finite time");
    }
    if seg.start_s < 0.0 {
        return fail("negative start_s");
    }
    if seg.end_s <= seg.start_s {
        return fail("end_s must be greater than start_s");
    }
    if seg.end_s - seg.start_s > limits.max_segment_s {
        return fail(&format!("longer than {} s", limits.max_segment_s));
    }
    Ok(())
}

/// Serializes a hypothesis set to the interchange format.
pub fn emit_hypotheses(hs: &HypothesisSet) -> String {
    let doc = Document {
        asr_id: hs.asr_id.clone(),
        segments: hs
            .utterances
            .iter()
            .map(|u| Segment {
                id: u.id.clone(),
                audio: u.audio_path.to_string_lossy().into_owned(),
                start_s: u.start_s,
                end_s: u.end_s,
                text: u.pred_text_raw.clone(),
                words: u.timed_words.clone(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("interchange document serializes")
}

/// Runs an external recognizer and parses its stdout as an interchange document.
///
/// `{audio}` in the template is replaced by the shell-quoted audio path and
/// the result is run through `sh -c`.
pub fn run_external_asr(audio_path: &Path, command_template: &str) -> Result<HypothesisSet, HypothesisError> {
    if !command_template.contains("{audio}") {
        return Err(HypothesisError::MissingPlaceholder);
    }
    let command = command_template.replace("{audio}", &shell_quote(&audio_path.to_string_lossy()));
    let mut child = Command::new("sh")
        .arg("-c")
        .arg(&command)
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(HypothesisError::Spawn)?;

    // Drain stderr on a separate thread so a chatty child can't block on a
    // full pipe while we read stdout.
    let mut stderr = child.stderr.take().expect("stderr piped");
    let stderr_reader = std::thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = stderr.read_to_end(&mut buf);
        buf
    });
    let mut stdout = Vec::new();
    child
        .stdout
        .take()
        .expect("stdout piped")
        .read_to_end(&mut stdout)
        .map_err(HypothesisError::Spawn)?;
    let status = child.wait().map_err(HypothesisError::Spawn)?;
    let stderr = stderr_reader.join().unwrap_or_default();

    if !status.success() {
        let text = String::from_utf8_lossy(&stderr);
        let excerpt: String = text.chars().take(500).collect();
        return Err(HypothesisError::NonZeroExit {
            code: status.code().unwrap_or(-1),
            stderr: excerpt.trim().to_string(),
        });
    }
    let text = String::from_utf8(stdout).map_err(|_| HypothesisError::Schema("stdout is not UTF-8".into()))?;
    parse_hypotheses(&text, SchemaLimits::default())
}

fn shell_quote(s: &str) -> String {
    format!("'{}'", s.replace('\'', r"'\''"))
}

/// Per-word corruption rates for the mock recognizer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseSpec {
    pub substitution: f64,
    pub insertion: f64,
    pub deletion: f64,
    /// Replacement/insertion vocabulary. Empty means the built-in vocabulary,
    /// whose tokens never collide with ordinary words.
    pub vocabulary: Vec<String>,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec {
            substitution: 0.0,
            insertion: 0.0,
            deletion: 0.0,
            vocabulary: Vec::new(),
        }
    }
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("substitution", self.substitution),
            ("insertion", self.insertion),
            ("deletion", self.deletion),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(format!("{name} rate {v} is outside [0, 1]"));
            }
        }
        Ok(())
    }

    fn vocabulary(&self) -> Vec<Word> {
        if self.vocabulary.is_empty() {
            (0..64).map(|i| Word::new(format!("zq{i}x"))).collect()
        } else {
            self.vocabulary
                .iter()
                .flat_map(|v| clean_text(v, CleanOptions::default()))
                .collect()
        }
    }
}

/// A ground-truth segment to feed the mock recognizer.
#[derive(Clone, Debug, PartialEq)]
pub struct TruthSegment {
    pub id: String,
    pub audio_path: PathBuf,
    pub start_s: f64,
    pub end_s: f64,
    pub words: Vec<Word>,
}

/// Deterministically corrupts each truth segment: every word is deleted with
/// probability `deletion`, otherwise substituted with probability
/// `substitution`, and followed by a random insertion with probability
/// `insertion`. Substitutes always differ from the original word.
pub fn mock_asr(truth: &[TruthSegment], noise: &NoiseSpec, seed: u64) -> HypothesisSet {
    let vocab = noise.vocabulary();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let utterances = truth
        .iter()
        .map(|seg| {
            let mut pred = Vec::with_capacity(seg.words.len());
            for w in &seg.words {
                if rng.gen_bool(noise.deletion) {
                    continue;
                }
                if rng.gen_bool(noise.substitution) {
                    let candidates: Vec<&Word> = vocab.iter().filter(|v| *v != w).collect();
                    match candidates.choose(&mut rng) {
                        Some(r) => pred.push((*r).clone()),
                        None => pred.push(w.clone()),
                    }
                } else {
                    pred.push(w.clone());
                }
                if rng.gen_bool(noise.insertion) {
                    if let Some(r) = vocab.choose(&mut rng) {
                        pred.push(r.clone());
                    }
                }
            }
            Utterance {
                id: seg.id.clone(),
                audio_path: seg.audio_path.clone(),
                start_s: seg.start_s,
                end_s: seg.end_s,
                pred_text_raw: join_words(&pred),
                pred_words: pred,
                timed_words: None,
            }
        })
        .collect();
    HypothesisSet {
        asr_id: format!("mock-asr(seed={seed})"),
        utterances,
    }
}
