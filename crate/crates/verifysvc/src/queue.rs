//! The review queue and its event-sourced decision log.
//!
//! State is the verify items plus every decision ever acknowledged. The log
//! (`decisions.jsonl`) is the only thing written during a session; each line
//! is synced to disk before the decision is acknowledged, so replaying the
//! log over the items on startup restores exactly the acknowledged state.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use fasa_core::dataset::{emit_manifest, load_manifest, merge_decisions, DatasetError, MergeError};
use fasa_core::review::{read_verify_items, ReviewError, VerifyDecision, VerifyItem};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const VERIFY_FILE: &str = "data_verify.jsonl";
pub const DECISION_LOG: &str = "decisions.jsonl";
pub const AUTO_MANIFEST: &str = "data_align.manifest.jsonl";
pub const FINAL_MANIFEST: &str = "final.manifest.jsonl";
pub const DEFAULT_PAGE_SIZE: usize = 50;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("unknown item {0:?}")]
    UnknownId(String),
    #[error("item {id:?} was already decided as {existing}")]
    AlreadyDecided { id: String, existing: String },
    #[error("manual decision for {0:?} has no usable text")]
    MissingManualText(String),
    #[error("page numbers start at 1")]
    BadPage,
    #[error("{path}:{line}: corrupt decision log: {message}")]
    CorruptLog { path: PathBuf, line: usize, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Review(#[from] ReviewError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Merge(#[from] MergeError),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ItemStatus {
    #[default]
    Pending,
    Decided,
}

/// Filter for listings; `all` returns both kinds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StatusFilter {
    #[default]
    Pending,
    Decided,
    All,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ItemView {
    #[serde(flatten)]
    pub item: VerifyItem,
    pub status: ItemStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decision: Option<VerifyDecision>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Page {
    pub items: Vec<ItemView>,
    pub page: usize,
    pub page_size: usize,
    /// Items matching the filter, over all pages.
    pub total: usize,
    pub pending: usize,
    pub decided: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExportSummary {
    pub path: PathBuf,
    pub records: usize,
    pub auto_records: usize,
    pub added: usize,
}

pub struct ReviewQueue {
    dir: PathBuf,
    items: Vec<VerifyItem>,
    index: HashMap<String, usize>,
    /// Acknowledged decisions, in log order.
    decisions: Vec<VerifyDecision>,
    decided: HashMap<String, usize>,
    log: File,
}

impl ReviewQueue {
    /// Opens the session in `dir`: reads `data_verify.jsonl` and replays
    /// `decisions.jsonl`, creating it if needed. A torn last line (no
    /// trailing newline, from a crash mid-write) was never acknowledged and
    /// is cut off.
    pub fn open(dir: &Path) -> Result<Self, ServiceError> {
        let items = read_verify_items(&dir.join(VERIFY_FILE))?;
        let index = items.iter().enumerate().map(|(i, it)| (it.id.clone(), i)).collect();
        let log_path = dir.join(DECISION_LOG);
        let io = |source| ServiceError::Io {
            path: log_path.clone(),
            source,
        };
        let mut log = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(&log_path)
            .map_err(io)?;
        let mut text = String::new();
        log.read_to_string(&mut text).map_err(io)?;

        let complete = text.rfind('\n').map_or(0, |i| i + 1);
        if complete < text.len() {
            log::warn!(
                "{}: dropping {} bytes of unacknowledged trailing write",
                log_path.display(),
                text.len() - complete
            );
            log.set_len(complete as u64).map_err(io)?;
            log.sync_all().map_err(io)?;
        }
        log.seek(SeekFrom::End(0)).map_err(io)?;

        let mut queue = ReviewQueue {
            dir: dir.to_path_buf(),
            items,
            index,
            decisions: Vec::new(),
            decided: HashMap::new(),
            log,
        };
        for (idx, line) in text[..complete].lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let corrupt = |message: String| ServiceError::CorruptLog {
                path: log_path.clone(),
                line: idx + 1,
                message,
            };
            let d: VerifyDecision = serde_json::from_str(line).map_err(|e| corrupt(e.to_string()))?;
            match queue.check(&d) {
                Ok(None) => queue.record(d),
                Ok(Some(_)) => {}
                Err(e) => return Err(corrupt(e.to_string())),
            }
        }
        Ok(queue)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn items(&self) -> &[VerifyItem] {
        &self.items
    }

    pub fn decisions(&self) -> &[VerifyDecision] {
        &self.decisions
    }

    pub fn pending_count(&self) -> usize {
        self.items.len() - self.decided.len()
    }

    fn view(&self, i: usize) -> ItemView {
        let item = self.items[i].clone();
        let decision = self.decided.get(&item.id).map(|&d| self.decisions[d].clone());
        ItemView {
            status: if decision.is_some() { ItemStatus::Decided } else { ItemStatus::Pending },
            item,
            decision,
        }
    }

    pub fn get(&self, id: &str) -> Result<ItemView, ServiceError> {
        let &i = self.index.get(id).ok_or_else(|| ServiceError::UnknownId(id.to_string()))?;
        Ok(self.view(i))
    }

    /// Worst WER first; ties keep queue order. Pages are 1-based.
    pub fn list(&self, filter: StatusFilter, page: usize, page_size: usize) -> Result<Page, ServiceError> {
        if page == 0 || page_size == 0 {
            return Err(ServiceError::BadPage);
        }
        let mut order: Vec<usize> = (0..self.items.len())
            .filter(|&i| {
                let decided = self.decided.contains_key(&self.items[i].id);
                match filter {
                    StatusFilter::Pending => !decided,
                    StatusFilter::Decided => decided,
                    StatusFilter::All => true,
                }
            })
            .collect();
        order.sort_by(|&a, &b| self.items[b].wer.total_cmp(&self.items[a].wer));
        let total = order.len();
        let items = order
            .into_iter()
            .skip((page - 1).saturating_mul(page_size))
            .take(page_size)
            .map(|i| self.view(i))
            .collect();
        Ok(Page {
            items,
            page,
            page_size,
            total,
            pending: self.pending_count(),
            decided: self.decided.len(),
        })
    }

    /// Path of the item's cut segment.
    pub fn audio_path(&self, id: &str) -> Result<PathBuf, ServiceError> {
        let &i = self.index.get(id).ok_or_else(|| ServiceError::UnknownId(id.to_string()))?;
        Ok(self.dir.join(&self.items[i].audio))
    }

    /// `Ok(Some(existing))` when an identical decision is already recorded.
    fn check(&self, d: &VerifyDecision) -> Result<Option<usize>, ServiceError> {
        if !self.index.contains_key(&d.item_id) {
            return Err(ServiceError::UnknownId(d.item_id.clone()));
        }
        d.validate().map_err(|_| ServiceError::MissingManualText(d.item_id.clone()))?;
        match self.decided.get(&d.item_id) {
            None => Ok(None),
            Some(&k) if self.decisions[k].same_choice(d) => Ok(Some(k)),
            Some(&k) => Err(ServiceError::AlreadyDecided {
                id: d.item_id.clone(),
                existing: self.decisions[k].action.to_string(),
            }),
        }
    }

    fn record(&mut self, d: VerifyDecision) {
        self.decided.insert(d.item_id.clone(), self.decisions.len());
        self.decisions.push(d);
    }

    /// Records a decision. Returns once the log line is on disk; repeating
    /// an identical decision changes nothing.
    pub fn decide(&mut self, mut d: VerifyDecision) -> Result<ItemView, ServiceError> {
        if self.check(&d)?.is_none() {
            if d.decided_at.is_none() {
                d.decided_at = Some(chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true));
            }
            let mut line = serde_json::to_string(&d).expect("decision serializes");
            line.push('\n');
            let io = |source| ServiceError::Io {
                path: self.dir.join(DECISION_LOG),
                source,
            };
            self.log.write_all(line.as_bytes()).map_err(io)?;
            self.log.sync_data().map_err(io)?;
            self.record(d.clone());
        }
        self.get(&d.item_id)
    }

    /// Merges the decisions over the auto-aligned manifest and writes
    /// `final.manifest.jsonl`.
    pub fn export(&self) -> Result<ExportSummary, ServiceError> {
        let auto = load_manifest(&self.dir.join(AUTO_MANIFEST))?;
        let merged = merge_decisions(&auto, &self.items, &self.decisions)?;
        let path = self.dir.join(FINAL_MANIFEST);
        emit_manifest(&merged, &path)?;
        Ok(ExportSummary {
            path,
            records: merged.records.len(),
            auto_records: auto.records.len(),
            added: merged.records.len() - auto.records.len(),
        })
    }
}
