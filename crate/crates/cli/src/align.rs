//! `fasa align`: corpus discovery, alignment, cutting, PGC and output.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use fasa_core::aligncore::{align_all, pgc_filter, AlignedItem, VerifyCandidate};
use fasa_core::dataset::{emit_manifest, load_speaker_meta, Manifest, PcmAudio, RecordSource, SegmentRecord, SpeakerMeta};
use fasa_core::hypothesis::{load_hypotheses, run_external_asr, HypothesisSet, Utterance};
use fasa_core::review::{write_verify_items, VerifyItem};
use fasa_core::transcript::{clean, CleanOptions, FormatHint, RawTranscript, Word};
use fasa_core::TOOL_VERSION;
use fasa_verifysvc::{AUTO_MANIFEST, DECISION_LOG, VERIFY_FILE};
use rayon::prelude::*;
use serde::Serialize;

use crate::args::CleanMode;
use crate::config::{AsrSource, PgcSource, RunConfig};
use crate::Failure;

pub const SEGMENTS_DIR: &str = "segments";
pub const VERIFY_SEGMENTS_DIR: &str = "verify_segments";
pub const RUN_REPORT: &str = "run_report.json";

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Counts {
    pub utterances: usize,
    pub aligned: usize,
    pub verify: usize,
    pub discarded: usize,
}

impl Counts {
    fn add(&mut self, other: &Counts) {
        self.utterances += other.utterances;
        self.aligned += other.aligned;
        self.verify += other.verify;
        self.discarded += other.discarded;
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PgcDrop {
    pub id: String,
    pub gt_len: usize,
    pub pred_len: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct PgcReport {
    pub source: String,
    pub dropped: Vec<PgcDrop>,
    /// Aligned ids without a second-round prediction (kept).
    pub missing: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FileReport {
    pub file: String,
    #[serde(flatten)]
    pub counts: Counts,
    pub pgc_dropped: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SkippedFile {
    pub file: String,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub tool_version: String,
    pub asr_id: String,
    pub workers: usize,
    pub counts: Counts,
    pub emitted_records: usize,
    pub pgc: PgcReport,
    pub files: Vec<FileReport>,
    pub skipped_files: Vec<SkippedFile>,
    /// Hypothesis segments whose audio file is not in the corpus.
    pub unmatched_hypotheses: usize,
    pub wall_time_s: f64,
}

#[derive(Clone, Debug)]
struct Recording {
    stem: String,
    wav: PathBuf,
    transcript: PathBuf,
    meta: Option<PathBuf>,
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Recordings in name order, plus the wavs that have no transcript.
fn discover(cfg: &RunConfig) -> Result<(Vec<Recording>, Vec<SkippedFile>)> {
    let dir = &cfg.corpus_dir;
    let entries = std::fs::read_dir(dir).with_context(|| format!("cannot read corpus directory {}", dir.display()))?;
    let mut wavs: Vec<PathBuf> = Vec::new();
    for entry in entries {
        let path = entry?.path();
        let is_wav = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("wav"));
        if is_wav && path.is_file() {
            wavs.push(path);
        }
    }
    wavs.sort();
    if wavs.is_empty() {
        bail!("no .wav files in corpus directory {}", dir.display());
    }
    let ext = hint(cfg.clean_mode).extension();
    let mut recordings = Vec::new();
    let mut skipped = Vec::new();
    for wav in wavs {
        let stem = wav.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let transcript = wav.with_extension(ext);
        if !transcript.is_file() {
            skipped.push(SkippedFile {
                file: file_name(&wav),
                error: format!("no transcript {}", file_name(&transcript)),
            });
            continue;
        }
        let meta = dir.join(format!("{stem}.meta.json"));
        recordings.push(Recording {
            meta: meta.is_file().then_some(meta),
            stem,
            wav,
            transcript,
        });
    }
    Ok((recordings, skipped))
}

fn hint(mode: CleanMode) -> FormatHint {
    match mode {
        CleanMode::Plain => FormatHint::Plain,
        CleanMode::Chat => FormatHint::Chat,
    }
}

struct FileOutcome {
    report: FileReport,
    records: Vec<SegmentRecord>,
    verify: Vec<VerifyItem>,
    dropped: Vec<PgcDrop>,
    missing: Vec<String>,
}

/// Ids become file names, so they must not reach outside the output folders.
fn check_id(id: &str) -> Result<()> {
    if id.is_empty() || id.contains(['/', '\\']) || id == "." || id == ".." {
        bail!("utterance id {id:?} cannot be used as a file name");
    }
    Ok(())
}

fn write_clip(audio: &PcmAudio, path: &Path, u: &Utterance) -> Result<()> {
    let bytes = audio
        .cut(u.start_s, u.end_s)
        .with_context(|| format!("cutting {} [{}, {}]", u.id, u.start_s, u.end_s))?;
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

/// Second-round predictions from running `tpl` on each cut segment.
fn second_round_by_command(items: &[AlignedItem], seg_dir: &Path, tpl: &str) -> HypothesisSet {
    let utterances = items
        .par_iter()
        .filter_map(|item| {
            let clip = seg_dir.join(format!("{}.wav", item.utterance.id));
            match run_external_asr(&clip, tpl) {
                Ok(hs) => {
                    let pred_words: Vec<Word> = hs.utterances.into_iter().flat_map(|u| u.pred_words).collect();
                    Some(Utterance {
                        pred_text_raw: pred_words.iter().map(Word::as_str).collect::<Vec<_>>().join(" "),
                        pred_words,
                        ..item.utterance.clone()
                    })
                }
                Err(e) => {
                    log::warn!("PGC command failed on {}: {e}", clip.display());
                    None
                }
            }
        })
        .collect();
    HypothesisSet {
        asr_id: format!("command: {tpl}"),
        utterances,
    }
}

fn process_file(
    rec: &Recording,
    utterances: Vec<Utterance>,
    cfg: &RunConfig,
    pgc_set: Option<&HypothesisSet>,
) -> Result<FileOutcome> {
    let raw = RawTranscript::read(&rec.transcript, hint(cfg.clean_mode))?;
    let transcript = clean(&raw, CleanOptions::default())?;
    let audio = PcmAudio::open(&rec.wav)?;
    let speaker = match &rec.meta {
        Some(p) => load_speaker_meta(p)?,
        None => SpeakerMeta::default(),
    };
    for u in &utterances {
        check_id(&u.id)?;
        audio
            .sample_range(u.start_s, u.end_s)
            .with_context(|| format!("segment {} lies outside {}", u.id, file_name(&rec.wav)))?;
    }

    let alignment = align_all(&utterances, &transcript, &cfg.thresholds);
    let counts = Counts {
        utterances: alignment.total(),
        aligned: alignment.aligned.len(),
        verify: alignment.verify.len(),
        discarded: alignment.discarded.len(),
    };

    let seg_dir = cfg.out_dir.join(SEGMENTS_DIR);
    let verify_dir = cfg.out_dir.join(VERIFY_SEGMENTS_DIR);
    alignment
        .aligned
        .par_iter()
        .try_for_each(|a| write_clip(&audio, &seg_dir.join(format!("{}.wav", a.utterance.id)), &a.utterance))?;
    alignment
        .verify
        .par_iter()
        .try_for_each(|v| write_clip(&audio, &verify_dir.join(format!("{}.wav", v.utterance.id)), &v.utterance))?;

    let (kept, dropped, missing) = match (&cfg.pgc, pgc_set) {
        (PgcSource::Off, _) => (alignment.aligned, Vec::new(), Vec::new()),
        (PgcSource::HypFile(_), Some(set)) => {
            let out = pgc_filter(alignment.aligned, set, &cfg.thresholds);
            (out.kept, out.dropped, out.missing)
        }
        (PgcSource::Command(tpl), _) => {
            let set = second_round_by_command(&alignment.aligned, &seg_dir, tpl);
            let out = pgc_filter(alignment.aligned, &set, &cfg.thresholds);
            (out.kept, out.dropped, out.missing)
        }
        (PgcSource::HypFile(_), None) => unreachable!("PGC hypotheses loaded up front"),
    };
    let mut drops = Vec::with_capacity(dropped.len());
    for (item, pred_len) in dropped {
        let clip = seg_dir.join(format!("{}.wav", item.utterance.id));
        std::fs::remove_file(&clip).with_context(|| format!("removing {}", clip.display()))?;
        drops.push(PgcDrop {
            id: item.utterance.id,
            gt_len: item.gt.len(),
            pred_len,
        });
    }

    let source_audio = PathBuf::from(file_name(&rec.wav));
    let records = kept
        .into_iter()
        .map(|a| SegmentRecord {
            audio_path: PathBuf::from(SEGMENTS_DIR).join(format!("{}.wav", a.utterance.id)),
            id: a.utterance.id,
            source_audio: source_audio.clone(),
            start_s: a.utterance.start_s,
            end_s: a.utterance.end_s,
            transcript: a.gt,
            source: RecordSource::Auto,
            speaker_meta: speaker.clone(),
        })
        .collect();
    let verify = alignment
        .verify
        .into_iter()
        .map(|v: VerifyCandidate| VerifyItem {
            audio: PathBuf::from(VERIFY_SEGMENTS_DIR).join(format!("{}.wav", v.utterance.id)),
            id: v.utterance.id,
            source_audio: source_audio.clone(),
            start_s: v.utterance.start_s,
            end_s: v.utterance.end_s,
            gt: v.gt,
            pred: v.pred,
            wer: v.matched.wer.as_f64(),
            speaker: speaker.clone(),
        })
        .collect();
    Ok(FileOutcome {
        report: FileReport {
            file: file_name(&rec.wav),
            counts,
            pgc_dropped: drops.len(),
        },
        records,
        verify,
        dropped: drops,
        missing,
    })
}

/// Clears the folders this command owns in `out`, and moves a review log
/// from an earlier run out of the way (it refers to the old queue).
fn prepare_out_dir(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    for sub in [SEGMENTS_DIR, VERIFY_SEGMENTS_DIR] {
        let d = out.join(sub);
        if d.exists() {
            std::fs::remove_dir_all(&d).with_context(|| format!("clearing {}", d.display()))?;
        }
        std::fs::create_dir_all(&d).with_context(|| format!("creating {}", d.display()))?;
    }
    let log = out.join(DECISION_LOG);
    if log.exists() {
        let old = out.join(format!("{DECISION_LOG}.old"));
        log::warn!("moving review log of a previous run to {}", old.display());
        std::fs::rename(&log, &old)?;
    }
    Ok(())
}

pub fn cmd_align(cfg: &RunConfig) -> Result<RunReport, Failure> {
    let started = Instant::now();
    let (recordings, mut skipped) = discover(cfg).map_err(Failure::Corpus)?;
    if cfg.strict {
        if let Some(s) = skipped.first() {
            return Err(Failure::Corpus(anyhow!("{}: {}", s.file, s.error)));
        }
    }

    let mut unmatched_hypotheses = 0;
    let (asr_id, mut per_file): (String, HashMap<String, Vec<Utterance>>) = match &cfg.asr {
        AsrSource::HypFile(path) => {
            let hs = load_hypotheses(path)
                .with_context(|| format!("loading hypotheses {}", path.display()))
                .map_err(Failure::Corpus)?;
            let names: std::collections::HashSet<String> = recordings.iter().map(|r| file_name(&r.wav)).collect();
            let mut by_file: HashMap<String, Vec<Utterance>> = HashMap::new();
            for u in hs.utterances {
                let name = file_name(&u.audio_path);
                if names.contains(&name) {
                    by_file.entry(name).or_default().push(u);
                } else {
                    unmatched_hypotheses += 1;
                }
            }
            if unmatched_hypotheses > 0 {
                log::warn!("{unmatched_hypotheses} hypothesis segments refer to audio not in the corpus");
            }
            (hs.asr_id, by_file)
        }
        AsrSource::Command(tpl) => (format!("command: {tpl}"), HashMap::new()),
    };
    let pgc_set = match &cfg.pgc {
        PgcSource::HypFile(path) => Some(
            load_hypotheses(path)
                .with_context(|| format!("loading PGC hypotheses {}", path.display()))
                .map_err(Failure::Corpus)?,
        ),
        _ => None,
    };

    prepare_out_dir(&cfg.out_dir).map_err(Failure::Other)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Failure::Other(e.into()))?;
    let jobs: Vec<(Recording, Option<Vec<Utterance>>)> = recordings
        .into_iter()
        .map(|r| {
            let utts = per_file.remove(&file_name(&r.wav));
            (r, utts)
        })
        .collect();
    let results: Vec<(Recording, Result<FileOutcome>)> = pool.install(|| {
        jobs.into_par_iter()
            .map(|(rec, utts)| {
                let utts = match (&cfg.asr, utts) {
                    (AsrSource::Command(tpl), _) => run_external_asr(&rec.wav, tpl).map(|hs| {
                        hs.utterances
                            .into_iter()
                            .map(|u| Utterance {
                                id: format!("{}_{}", rec.stem, u.id),
                                audio_path: PathBuf::from(file_name(&rec.wav)),
                                ..u
                            })
                            .collect()
                    }),
                    (AsrSource::HypFile(_), u) => Ok(u.unwrap_or_default()),
                };
                let out = utts
                    .map_err(anyhow::Error::from)
                    .and_then(|u| process_file(&rec, u, cfg, pgc_set.as_ref()));
                (rec, out)
            })
            .collect()
    });

    let mut counts = Counts::default();
    let mut files = Vec::new();
    let mut records = Vec::new();
    let mut verify = Vec::new();
    let mut pgc = PgcReport {
        source: match &cfg.pgc {
            PgcSource::Off => "off".into(),
            PgcSource::HypFile(p) => format!("file: {}", p.display()),
            PgcSource::Command(c) => format!("command: {c}"),
        },
        ..PgcReport::default()
    };
    for (rec, result) in results {
        match result {
            Ok(out) => {
                counts.add(&out.report.counts);
                files.push(out.report);
                records.extend(out.records);
                verify.extend(out.verify);
                pgc.dropped.extend(out.dropped);
                pgc.missing.extend(out.missing);
            }
            Err(e) => {
                let file = file_name(&rec.wav);
                if cfg.strict {
                    return Err(Failure::Corpus(e.context(file)));
                }
                log::error!("skipping {file}: {e:#}");
                skipped.push(SkippedFile {
                    file,
                    error: format!("{e:#}"),
                });
            }
        }
    }
    if files.is_empty() {
        return Err(Failure::Corpus(anyhow!("no corpus file could be processed")));
    }

    let mut manifest = Manifest::new(TOOL_VERSION, cfg.thresholds, asr_id.clone());
    manifest.records = records;
    let write = || -> Result<()> {
        emit_manifest(&manifest, &cfg.out_dir.join(AUTO_MANIFEST))?;
        write_verify_items(&cfg.out_dir.join(VERIFY_FILE), &verify)?;
        Ok(())
    };
    write().map_err(Failure::Other)?;

    let report = RunReport {
        tool_version: TOOL_VERSION.to_string(),
        asr_id,
        workers: cfg.workers,
        counts,
        emitted_records: manifest.records.len(),
        pgc,
        files,
        skipped_files: skipped,
        unmatched_hypotheses,
        wall_time_s: started.elapsed().as_secs_f64(),
    };
    let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    let path = cfg.out_dir.join(RUN_REPORT);
    std::fs::write(&path, text)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(Failure::Other)?;
    Ok(report)
}

pub fn summary(report: &RunReport) -> String {
    let c = &report.counts;
    let mut s = format!(
        "{} utterances: {} aligned, {} to verify, {} discarded\n",
        c.utterances, c.aligned, c.verify, c.discarded
    );
    if !report.pgc.dropped.is_empty() {
        s += &format!("PGC dropped {} aligned segments\n", report.pgc.dropped.len());
    }
    s += &format!("{} records written in {:.2} s\n", report.emitted_records, report.wall_time_s);
    for f in &report.skipped_files {
        s += &format!("skipped {}: {}\n", f.file, f.error);
    }
    s
}
