//! Synthetic corpora with known ground truth.
//!
//! Each recording is a sequence of tone bursts (one per segment) separated by
//! silence; only durations matter to the pipeline. The provided transcript is
//! built from the segment words and then corrupted: a prefix of segments can
//! be left untranscribed, random segments can be left out, the remaining
//! segments can be shuffled in blocks, and cleaning-removable annotation
//! noise can be sprinkled in.

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::metrics::GoldAnnotation;
use crate::dataset::{PcmAudio, SpeakerMeta, SAMPLE_RATE};
use crate::hypothesis::{emit_hypotheses, mock_asr, HypothesisSet, NoiseSpec, TruthSegment};
use crate::transcript::{FormatHint, Word};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synthesis spec: {0}")]
    InvalidSpec(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    /// Total segments across all recordings.
    pub segments: usize,
    pub recordings: usize,
    pub min_words: usize,
    pub max_words: usize,
    /// Fraction of each recording's leading segments with no transcription.
    pub prefix_drop_frac: f64,
    /// Shuffle the transcribed segments in blocks of `block_size`.
    pub block_shuffle: bool,
    pub block_size: usize,
    /// Per-segment probability of casing/punctuation/annotation noise.
    pub annotation_noise_rate: f64,
    /// Fraction of segments (outside the dropped prefix) left untranscribed.
    pub untranscribed_frac: f64,
    pub asr_noise: NoiseSpec,
    pub format: FormatHint,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            segments: 100,
            recordings: 1,
            min_words: 4,
            max_words: 12,
            prefix_drop_frac: 0.0,
            block_shuffle: false,
            block_size: 5,
            annotation_noise_rate: 0.0,
            untranscribed_frac: 0.0,
            asr_noise: NoiseSpec::default(),
            format: FormatHint::Plain,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidSpec(m));
        for (name, v) in [
            ("prefix_drop_frac", self.prefix_drop_frac),
            ("annotation_noise_rate", self.annotation_noise_rate),
            ("untranscribed_frac", self.untranscribed_frac),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} = {v} is outside [0, 1]"));
            }
        }
        self.asr_noise.validate().map_err(SynthError::InvalidSpec)?;
        if self.recordings == 0 || self.segments < self.recordings {
            return bad("need at least one segment per recording".into());
        }
        if self.min_words == 0 || self.min_words > self.max_words {
            return bad("word counts must satisfy 1 <= min_words <= max_words".into());
        }
        // keeps every segment under the 30 s ASR window
        if self.max_words > 80 {
            return bad("max_words must be at most 80".into());
        }
        if self.block_size == 0 {
            return bad("block_size must be positive".into());
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentStatus {
    Transcribed,
    PrefixDropped,
    Untranscribed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthSegment {
    pub id: String,
    pub recording: String,
    pub words: Vec<Word>,
    pub start_s: f64,
    pub end_s: f64,
    pub status: SegmentStatus,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthRecording {
    pub name: String,
    pub audio: PcmAudio,
    /// Raw transcript text as written to disk (before cleaning).
    pub transcript_text: String,
    /// The words cleaning is expected to recover from `transcript_text`.
    pub full_transcript: Vec<Word>,
    pub speaker: SpeakerMeta,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthCorpus {
    pub spec: SynthSpec,
    pub seed: u64,
    pub segments: Vec<SynthSegment>,
    pub recordings: Vec<SynthRecording>,
}

impl SynthCorpus {
    pub fn truth_segments(&self) -> Vec<TruthSegment> {
        self.segments
            .iter()
            .map(|s| TruthSegment {
                id: s.id.clone(),
                audio_path: PathBuf::from(format!("{}.wav", s.recording)),
                start_s: s.start_s,
                end_s: s.end_s,
                words: s.words.clone(),
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthOutput {
    pub corpus: SynthCorpus,
    pub hypotheses: HypothesisSet,
    /// An independent second recognition pass, for post-generation checks.
    pub second_round: HypothesisSet,
    pub gold: GoldAnnotation,
}

const FUNCTION_WORDS: [&str; 12] = ["the", "a", "and", "then", "he", "she", "it", "was", "to", "they", "so", "in"];
const ONSETS: &[u8] = b"bdfgklmnprstvz";
const VOWELS: &[u8] = b"aeiou";
const CODAS: &[u8] = b"bdgklmnprst";

fn content_word(rng: &mut ChaCha8Rng) -> Word {
    let mut s = String::new();
    let syllables = rng.gen_range(1..=2);
    for i in 0..syllables {
        s.push(*ONSETS.choose(rng).unwrap() as char);
        s.push(*VOWELS.choose(rng).unwrap() as char);
        if i + 1 == syllables {
            s.push(*CODAS.choose(rng).unwrap() as char);
        }
    }
    Word::new(s)
}

fn sentence(rng: &mut ChaCha8Rng, spec: &SynthSpec) -> Vec<Word> {
    let n = rng.gen_range(spec.min_words..=spec.max_words);
    (0..n)
        .map(|_| {
            if rng.gen_bool(0.25) {
                Word::new(*FUNCTION_WORDS.choose(rng).unwrap())
            } else {
                content_word(rng)
            }
        })
        .collect()
}

const LEAD_IN_MS: u64 = 500;
const GAP_MS: u64 = 400;
const MS_PER_WORD: u64 = 300;
const TAIL_MS: u64 = 500;

/// Builds a corpus, its mock ASR predictions and gold annotation. Pure in
/// `(spec, seed)`.
pub fn generate(spec: &SynthSpec, seed: u64) -> Result<SynthOutput, SynthError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut segments = Vec::with_capacity(spec.segments);
    let mut recordings = Vec::with_capacity(spec.recordings);

    for r in 0..spec.recordings {
        let name = format!("rec{r:03}");
        let n = spec.segments / spec.recordings + usize::from(r < spec.segments % spec.recordings);

        // timeline and audio
        let mut cursor_ms = LEAD_IN_MS;
        let mut samples = vec![0i16; ms_to_samples(LEAD_IN_MS)];
        let first = segments.len();
        for k in 0..n {
            let words = sentence(&mut rng, spec);
            let dur_ms = MS_PER_WORD * words.len() as u64;
            let freq = 180.0 + 15.0 * (k % 24) as f64;
            samples.extend((0..ms_to_samples(dur_ms)).map(|i| {
                let t = i as f64 / SAMPLE_RATE as f64;
                (0.25 * i16::MAX as f64 * (TAU * freq * t).sin()).round() as i16
            }));
            samples.extend(std::iter::repeat(0).take(ms_to_samples(GAP_MS)));
            segments.push(SynthSegment {
                id: format!("{name}_{k:04}"),
                recording: name.clone(),
                words,
                start_s: cursor_ms as f64 / 1000.0,
                end_s: (cursor_ms + dur_ms) as f64 / 1000.0,
                status: SegmentStatus::Transcribed,
            });
            cursor_ms += dur_ms + GAP_MS;
        }
        samples.extend(std::iter::repeat(0).take(ms_to_samples(TAIL_MS)));

        // corruption of the provided transcript
        let recording_segments = &mut segments[first..];
        let dropped = (spec.prefix_drop_frac * n as f64).round() as usize;
        for seg in recording_segments.iter_mut().take(dropped) {
            seg.status = SegmentStatus::PrefixDropped;
        }
        let mut rest: Vec<usize> = (dropped..n).collect();
        rest.shuffle(&mut rng);
        let untranscribed = ((spec.untranscribed_frac * n as f64).round() as usize).min(rest.len());
        for &k in &rest[..untranscribed] {
            recording_segments[k].status = SegmentStatus::Untranscribed;
        }

        let mut kept: Vec<usize> = (0..n)
            .filter(|&k| recording_segments[k].status == SegmentStatus::Transcribed)
            .collect();
        if spec.block_shuffle {
            let mut blocks: Vec<Vec<usize>> = kept.chunks(spec.block_size).map(<[usize]>::to_vec).collect();
            blocks.shuffle(&mut rng);
            kept = blocks.concat();
        }

        let mut text = String::new();
        let mut full_transcript = Vec::new();
        for &k in &kept {
            let words = &recording_segments[k].words;
            full_transcript.extend(words.iter().cloned());
            let noisy = rng.gen_bool(spec.annotation_noise_rate);
            let line = render_line(words, noisy, spec.format, &mut rng);
            text.push_str(&line);
            text.push('\n');
        }
        if spec.format == FormatHint::Chat {
            text = format!("@Begin\n@Languages:\teng\n@Participants:\tCHI Target_Child\n{text}@End\n");
        }

        let speaker = SpeakerMeta {
            speaker_id: Some(format!("spk{r:03}")),
            age_months: Some(48 + (r as u32 * 7) % 60),
            gender: Some(if r % 2 == 0 { "f" } else { "m" }.to_string()),
            disorder_label: None,
        };
        recordings.push(SynthRecording {
            name,
            audio: PcmAudio::from_samples(samples),
            transcript_text: text,
            full_transcript,
            speaker,
        });
    }

    let corpus = SynthCorpus {
        spec: spec.clone(),
        seed,
        segments,
        recordings,
    };
    let truth = corpus.truth_segments();
    let hypotheses = mock_asr(&truth, &spec.asr_noise, seed ^ 0x5eed_0001);
    let second_round = mock_asr(&truth, &spec.asr_noise, seed ^ 0x5eed_0002);
    let mut gold = GoldAnnotation::default();
    for s in &corpus.segments {
        gold.insert(s.id.clone(), s.words.clone());
    }
    Ok(SynthOutput {
        corpus,
        hypotheses,
        second_round,
        gold,
    })
}

fn ms_to_samples(ms: u64) -> usize {
    (ms * SAMPLE_RATE as u64 / 1000) as usize
}

fn render_line(words: &[Word], noisy: bool, format: FormatHint, rng: &mut ChaCha8Rng) -> String {
    let mut tokens: Vec<String> = words.iter().map(|w| w.as_str().to_string()).collect();
    if noisy {
        if let Some(first) = tokens.first_mut() {
            let mut cs = first.chars();
            if let Some(c) = cs.next() {
                *first = c.to_uppercase().chain(cs).collect();
            }
        }
        let at = rng.gen_range(0..tokens.len());
        match format {
            FormatHint::Plain => tokens[at].push(','),
            FormatHint::Chat => tokens.insert(at + 1, ["[*]", "[/]", "[//]", "[: x]"].choose(rng).unwrap().to_string()),
        }
    }
    let terminal = if noisy { *[".", "?", "!"].choose(rng).unwrap() } else { "." };
    match format {
        FormatHint::Plain => format!("{}{terminal}", tokens.join(" ")),
        FormatHint::Chat => format!("*CHI:\t{} {terminal}", tokens.join(" ")),
    }
}

/// Files written by [`write_corpus`].
#[derive(Clone, Debug, PartialEq)]
pub struct SynthPaths {
    pub corpus_dir: PathBuf,
    pub hypotheses: PathBuf,
    pub second_round: PathBuf,
    pub gold: PathBuf,
    pub truth: PathBuf,
}

/// Writes `corpus/<rec>.wav`, `corpus/<rec>.{txt,cha}`, `corpus/<rec>.meta.json`,
/// `hypotheses.json`, `pgc_hypotheses.json`, `gold.jsonl` and `truth.json`.
pub fn write_corpus(out: &SynthOutput, dir: &Path) -> Result<SynthPaths, SynthError> {
    let io = |p: &Path| {
        let p = p.to_path_buf();
        move |source| SynthError::Io { path: p, source }
    };
    let corpus_dir = dir.join("corpus");
    std::fs::create_dir_all(&corpus_dir).map_err(io(&corpus_dir))?;
    let ext = out.corpus.spec.format.extension();
    for rec in &out.corpus.recordings {
        let wav = corpus_dir.join(format!("{}.wav", rec.name));
        std::fs::write(&wav, rec.audio.to_wav_bytes()).map_err(io(&wav))?;
        let txt = corpus_dir.join(format!("{}.{ext}", rec.name));
        std::fs::write(&txt, &rec.transcript_text).map_err(io(&txt))?;
        let meta = corpus_dir.join(format!("{}.meta.json", rec.name));
        let json = serde_json::to_string_pretty(&rec.speaker).expect("speaker meta serializes");
        std::fs::write(&meta, json + "\n").map_err(io(&meta))?;
    }
    let paths = SynthPaths {
        hypotheses: dir.join("hypotheses.json"),
        second_round: dir.join("pgc_hypotheses.json"),
        gold: dir.join("gold.jsonl"),
        truth: dir.join("truth.json"),
        corpus_dir,
    };
    std::fs::write(&paths.hypotheses, emit_hypotheses(&out.hypotheses) + "\n").map_err(io(&paths.hypotheses))?;
    std::fs::write(&paths.second_round, emit_hypotheses(&out.second_round) + "\n").map_err(io(&paths.second_round))?;
    out.gold.write(&paths.gold).map_err(|e| SynthError::Io {
        path: paths.gold.clone(),
        source: std::io::Error::other(e.to_string()),
    })?;
    let truth = serde_json::json!({
        "seed": out.corpus.seed,
        "spec": out.corpus.spec,
        "segments": out.corpus.segments,
    });
    let text = serde_json::to_string_pretty(&truth).expect("truth serializes") + "\n";
    std::fs::write(&paths.truth, text).map_err(io(&paths.truth))?;
    Ok(paths)
}

/// Reads back `truth.json`.
pub fn load_truth(path: &Path) -> Result<Vec<SynthSegment>, SynthError> {
    #[derive(Deserialize)]
    struct Truth {
        segments: Vec<SynthSegment>,
    }
    let text = std::fs::read_to_string(path).map_err(|source| SynthError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let truth: Truth = serde_json::from_str(&text).map_err(|e| SynthError::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e.to_string()),
    })?;
    Ok(truth.segments)
}
