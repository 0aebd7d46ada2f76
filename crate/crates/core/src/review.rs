//! Items queued for human review and the decisions made on them.

use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::SpeakerMeta;
use crate::transcript::{clean_text, CleanOptions, Word};

#[derive(Debug, Error)]
pub enum ReviewError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Schema { path: PathBuf, line: usize, message: String },
    #[error("manual decision for {0:?} has no usable text")]
    MissingManualText(String),
}

/// One borderline utterance awaiting review (a line of `data_verify.jsonl`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyItem {
    pub id: String,
    /// Cut segment, relative to the output directory.
    pub audio: PathBuf,
    pub source_audio: PathBuf,
    pub start_s: f64,
    pub end_s: f64,
    pub gt: Vec<Word>,
    pub pred: Vec<Word>,
    pub wer: f64,
    #[serde(default)]
    pub speaker: SpeakerMeta,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerifyAction {
    AcceptGt,
    AcceptPred,
    Manual,
    Reject,
}

impl fmt::Display for VerifyAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VerifyAction::AcceptGt => "accept_gt",
            VerifyAction::AcceptPred => "accept_pred",
            VerifyAction::Manual => "manual",
            VerifyAction::Reject => "reject",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyDecision {
    pub item_id: String,
    pub action: VerifyAction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manual_text: Option<String>,
    /// RFC 3339; filled in by the service when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decided_at: Option<String>,
}

impl VerifyDecision {
    pub fn new(item_id: impl Into<String>, action: VerifyAction) -> Self {
        VerifyDecision {
            item_id: item_id.into(),
            action,
            manual_text: None,
            decided_at: None,
        }
    }

    pub fn manual(item_id: impl Into<String>, text: impl Into<String>) -> Self {
        VerifyDecision {
            manual_text: Some(text.into()),
            ..VerifyDecision::new(item_id, VerifyAction::Manual)
        }
    }

    /// Words of the manual transcription after cleaning.
    pub fn manual_words(&self) -> Result<Vec<Word>, ReviewError> {
        let words = clean_text(self.manual_text.as_deref().unwrap_or(""), CleanOptions::default());
        if words.is_empty() {
            return Err(ReviewError::MissingManualText(self.item_id.clone()));
        }
        Ok(words)
    }

    pub fn validate(&self) -> Result<(), ReviewError> {
        if self.action == VerifyAction::Manual {
            self.manual_words()?;
        }
        Ok(())
    }

    /// Same choice, ignoring the timestamp.
    pub fn same_choice(&self, other: &VerifyDecision) -> bool {
        self.item_id == other.item_id
            && self.action == other.action
            && (self.action != VerifyAction::Manual || self.manual_text == other.manual_text)
    }
}

pub fn write_verify_items(path: &Path, items: &[VerifyItem]) -> Result<(), ReviewError> {
    write_jsonl(path, items)
}

pub fn read_verify_items(path: &Path) -> Result<Vec<VerifyItem>, ReviewError> {
    read_jsonl(path)
}

pub(crate) fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), ReviewError> {
    let io = |source| ReviewError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
    for row in rows {
        serde_json::to_writer(&mut out, row).map_err(|e| io(e.into()))?;
        out.write_all(b"\n").map_err(io)?;
    }
    out.flush().map_err(io)
}

pub(crate) fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, ReviewError> {
    let io = |source| ReviewError::Io {
        path: path.to_path_buf(),
        source,
    };
    let reader = BufReader::new(std::fs::File::open(path).map_err(io)?);
    let mut rows = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(io)?;
        if line.trim().is_empty() {
            continue;
        }
        let row = serde_json::from_str(&line).map_err(|e| ReviewError::Schema {
            path: path.to_path_buf(),
            line: idx + 1,
            message: e.to_string(),
        })?;
        rows.push(row);
    }
    Ok(rows)
}
