//! JSONL dataset manifests and their metadata sidecar.

use std::collections::HashSet;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aligncore::{PgcMode, Thresholds, WindowPolicy};
use crate::transcript::Word;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Schema { path: PathBuf, line: usize, message: String },
    #[error("{path}: {message}")]
    Sidecar { path: PathBuf, message: String },
    #[error("duplicate record id {0:?}")]
    DuplicateId(String),
    #[error("record {id:?} references missing segment {path}")]
    MissingSegment { id: String, path: PathBuf },
    #[error("record {0:?} violates record invariants (end_s > start_s, non-empty transcript)")]
    InvalidRecord(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordSource {
    Auto,
    UserSelected,
    UserManual,
}

/// Speaker attributes carried opaquely from `<name>.meta.json`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpeakerMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speaker_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub age_months: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gender: Option<String>,
    #[serde(default, rename = "disorder", skip_serializing_if = "Option::is_none")]
    pub disorder_label: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentRecord {
    pub id: String,
    /// Emitted segment file, relative to the manifest's directory.
    #[serde(rename = "audio")]
    pub audio_path: PathBuf,
    pub source_audio: PathBuf,
    pub start_s: f64,
    pub end_s: f64,
    pub transcript: Vec<Word>,
    pub source: RecordSource,
    #[serde(rename = "speaker")]
    pub speaker_meta: SpeakerMeta,
}

impl SegmentRecord {
    fn check(&self) -> Result<(), String> {
        if !(self.end_s > self.start_s) {
            return Err("end_s must be greater than start_s".into());
        }
        if self.transcript.is_empty() {
            return Err("transcript is empty".into());
        }
        if self.transcript.iter().any(|w| w.as_str().is_empty()) {
            return Err("transcript contains an empty word".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Manifest {
    pub records: Vec<SegmentRecord>,
    pub tool_version: String,
    pub thresholds_used: Thresholds<f64>,
    pub asr_id: String,
}

impl Manifest {
    pub fn new(tool_version: impl Into<String>, thresholds_used: Thresholds<f64>, asr_id: impl Into<String>) -> Self {
        Manifest {
            records: Vec::new(),
            tool_version: tool_version.into(),
            thresholds_used,
            asr_id: asr_id.into(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    tool_version: String,
    asr_id: String,
    thresholds: ThresholdsJson,
}

#[derive(Debug, Serialize, Deserialize)]
struct ThresholdsJson {
    sigma_a: f64,
    sigma_i: f64,
    pgc_rel: f64,
    len_ratio_rho: f64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    paper_strict_windows: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pgc_abs_words: Option<usize>,
}

impl From<&Thresholds<f64>> for ThresholdsJson {
    fn from(th: &Thresholds<f64>) -> Self {
        ThresholdsJson {
            sigma_a: th.sigma_a,
            sigma_i: th.sigma_i,
            pgc_rel: th.pgc_rel,
            len_ratio_rho: th.len_ratio_rho,
            paper_strict_windows: th.windows == WindowPolicy::PaperStrict,
            pgc_abs_words: match th.pgc_mode {
                PgcMode::Relative => None,
                PgcMode::Absolute { max_words } => Some(max_words),
            },
        }
    }
}

impl From<ThresholdsJson> for Thresholds<f64> {
    fn from(t: ThresholdsJson) -> Self {
        Thresholds {
            sigma_a: t.sigma_a,
            sigma_i: t.sigma_i,
            pgc_rel: t.pgc_rel,
            len_ratio_rho: t.len_ratio_rho,
            windows: if t.paper_strict_windows {
                WindowPolicy::PaperStrict
            } else {
                WindowPolicy::Extended
            },
            pgc_mode: match t.pgc_abs_words {
                None => PgcMode::Relative,
                Some(max_words) => PgcMode::Absolute { max_words },
            },
        }
    }
}

/// `data_align.manifest.jsonl` -> `data_align.manifest.meta.json`.
pub fn sidecar_path(manifest_path: &Path) -> PathBuf {
    let name = manifest_path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let stem = name.strip_suffix(".jsonl").unwrap_or(&name);
    manifest_path.with_file_name(format!("{stem}.meta.json"))
}

/// Writes the records as JSONL plus the metadata sidecar.
///
/// Record ids must be unique and every segment file must exist relative to
/// the manifest's directory.
pub fn emit_manifest(manifest: &Manifest, path: &Path) -> Result<(), DatasetError> {
    let base = path.parent().unwrap_or(Path::new("."));
    let mut ids = HashSet::new();
    for r in &manifest.records {
        if !ids.insert(r.id.as_str()) {
            return Err(DatasetError::DuplicateId(r.id.clone()));
        }
        r.check().map_err(|_| DatasetError::InvalidRecord(r.id.clone()))?;
        let seg = base.join(&r.audio_path);
        if !seg.is_file() {
            return Err(DatasetError::MissingSegment {
                id: r.id.clone(),
                path: seg,
            });
        }
    }

    let io = |p: &Path| {
        let p = p.to_path_buf();
        move |source| DatasetError::Io { path: p, source }
    };
    let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(io(path))?);
    for r in &manifest.records {
        serde_json::to_writer(&mut out, r).map_err(|e| io(path)(e.into()))?;
        out.write_all(b"\n").map_err(io(path))?;
    }
    out.flush().map_err(io(path))?;

    let sidecar = Sidecar {
        tool_version: manifest.tool_version.clone(),
        asr_id: manifest.asr_id.clone(),
        thresholds: ThresholdsJson::from(&manifest.thresholds_used),
    };
    let side = sidecar_path(path);
    let mut text = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
    text.push('\n');
    std::fs::write(&side, text).map_err(io(&side))
}

/// Reads manifest records only; the sidecar is not required.
pub fn load_records(path: &Path) -> Result<Vec<SegmentRecord>, DatasetError> {
    let io = |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    };
    let reader = BufReader::new(std::fs::File::open(path).map_err(io)?);
    let mut ids = HashSet::new();
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(io)?;
        if line.trim().is_empty() {
            continue;
        }
        let schema = |message: String| DatasetError::Schema {
            path: path.to_path_buf(),
            line: idx + 1,
            message,
        };
        let record: SegmentRecord = serde_json::from_str(&line).map_err(|e| schema(e.to_string()))?;
        record.check().map_err(schema)?;
        if !ids.insert(record.id.clone()) {
            return Err(schema(format!("duplicate id {:?}", record.id)));
        }
        records.push(record);
    }
    Ok(records)
}

pub fn load_manifest(path: &Path) -> Result<Manifest, DatasetError> {
    let records = load_records(path)?;
    let side = sidecar_path(path);
    let text = std::fs::read_to_string(&side).map_err(|source| DatasetError::Io {
        path: side.clone(),
        source,
    })?;
    let sidecar: Sidecar = serde_json::from_str(&text).map_err(|e| DatasetError::Sidecar {
        path: side.clone(),
        message: e.to_string(),
    })?;
    Ok(Manifest {
        records,
        tool_version: sidecar.tool_version,
        thresholds_used: sidecar.thresholds.into(),
        asr_id: sidecar.asr_id,
    })
}

pub fn load_speaker_meta(path: &Path) -> Result<SpeakerMeta, DatasetError> {
    let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| DatasetError::Sidecar {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}
