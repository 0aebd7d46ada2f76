//! Transcript parsing and cleaning.
//!
//! Raw transcription text is reduced to a sequence of normalized [`Word`]s:
//! lowercase letters and digits, optionally with internal apostrophes. Every
//! word keeps the byte span it came from in the raw text so aligned ground
//! truth can always be traced back to the source file.

use std::fmt;
use std::ops::Range;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TranscriptError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: transcript is not valid UTF-8")]
    NotUtf8 { path: PathBuf },
    #[error("line {line}: speaker tier has no ':' separator")]
    MalformedTier { line: usize },
}

/// A normalized token. Comparison is exact string equality.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Word(String);

impl Word {
    /// Wraps an already-normalized token.
    ///
    /// Panics on an empty token; use [`clean_text`] for arbitrary input.
    pub fn new(token: impl Into<String>) -> Self {
        let token = token.into();
        assert!(!token.is_empty(), "words are never empty");
        Word(token)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn into_string(self) -> String {
        self.0
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(&self.0, f)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for Word {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

/// Builds a word sequence from whitespace-separated, already-normalized tokens.
pub fn words(text: &str) -> Vec<Word> {
    text.split_whitespace().map(Word::new).collect()
}

/// Joins words with single spaces.
pub fn join_words(words: &[Word]) -> String {
    let mut out = String::new();
    for (i, w) in words.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(w.as_str());
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormatHint {
    Plain,
    Chat,
}

impl FormatHint {
    pub fn extension(self) -> &'static str {
        match self {
            FormatHint::Plain => "txt",
            FormatHint::Chat => "cha",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CleanOptions {
    /// Keep apostrophes inside tokens ("it's" stays one word). When false,
    /// apostrophes are deleted like any other punctuation.
    pub keep_apostrophes: bool,
}

impl Default for CleanOptions {
    fn default() -> Self {
        CleanOptions { keep_apostrophes: true }
    }
}

impl CleanOptions {
    pub fn strict() -> Self {
        CleanOptions { keep_apostrophes: false }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawTranscript {
    pub source_path: PathBuf,
    pub text: String,
    pub format_hint: FormatHint,
}

impl RawTranscript {
    pub fn new(source_path: impl Into<PathBuf>, text: impl Into<String>, format_hint: FormatHint) -> Self {
        RawTranscript {
            source_path: source_path.into(),
            text: text.into(),
            format_hint,
        }
    }

    pub fn read(path: &Path, format_hint: FormatHint) -> Result<Self, TranscriptError> {
        let bytes = std::fs::read(path).map_err(|source| TranscriptError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let text = String::from_utf8(bytes).map_err(|_| TranscriptError::NotUtf8 {
            path: path.to_path_buf(),
        })?;
        Ok(RawTranscript::new(path, text, format_hint))
    }
}

/// The cleaned word sequence `T_1..T_m` with provenance into the raw text.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ProvidedTranscript {
    pub words: Vec<Word>,
    /// Byte range of each word in [`RawTranscript::text`].
    pub spans: Vec<Range<usize>>,
}

impl ProvidedTranscript {
    /// Builds a transcript without provenance; spans index into the
    /// single-space join of `words`.
    pub fn from_words(words: Vec<Word>) -> Self {
        let mut spans = Vec::with_capacity(words.len());
        let mut offset = 0;
        for w in &words {
            spans.push(offset..offset + w.as_str().len());
            offset += w.as_str().len() + 1;
        }
        ProvidedTranscript { words, spans }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

pub fn clean(raw: &RawTranscript, opts: CleanOptions) -> Result<ProvidedTranscript, TranscriptError> {
    match raw.format_hint {
        FormatHint::Plain => Ok(clean_plain(raw, opts)),
        FormatHint::Chat => clean_chat(raw, opts),
    }
}

/// Applies the plain cleaning rule to the whole text.
///
/// Letters, digits and apostrophes are kept, whitespace and dashes separate
/// tokens, everything else is deleted. Tokens are lowercased and trimmed of
/// leading/trailing apostrophes.
pub fn clean_plain(raw: &RawTranscript, opts: CleanOptions) -> ProvidedTranscript {
    let mut tok = Tokenizer::new(opts);
    tok.feed(&raw.text, 0);
    tok.finish()
}

/// Cleans free text into words (used for ASR output and manual input).
pub fn clean_text(text: &str, opts: CleanOptions) -> Vec<Word> {
    let mut tok = Tokenizer::new(opts);
    tok.feed(text, 0);
    tok.finish().words
}

/// Cleans a CHAT transcript: only speaker tiers (`*SPK:`) and their
/// continuation lines are kept, `[...]` codes are dropped, `<...>` groups keep
/// their inner words, then the plain rule applies.
pub fn clean_chat(raw: &RawTranscript, opts: CleanOptions) -> Result<ProvidedTranscript, TranscriptError> {
    let mut tok = Tokenizer::new(opts);
    let mut in_speaker_tier = false;
    let mut offset = 0;
    for (idx, line) in raw.text.split_inclusive('\n').enumerate() {
        let line_start = offset;
        offset += line.len();
        let content_start = if let Some(rest) = line.strip_prefix('*') {
            let colon = rest.find(':').ok_or(TranscriptError::MalformedTier { line: idx + 1 })?;
            in_speaker_tier = true;
            1 + colon + 1
        } else if line.starts_with('\t') && in_speaker_tier {
            0
        } else {
            in_speaker_tier = false;
            continue;
        };
        feed_chat_content(&mut tok, &line[content_start..], line_start + content_start);
    }
    Ok(tok.finish())
}

fn feed_chat_content(tok: &mut Tokenizer, content: &str, base: usize) {
    let mut depth = 0usize;
    for (i, c) in content.char_indices() {
        match c {
            '[' => {
                depth += 1;
                tok.boundary();
            }
            ']' if depth > 0 => {
                depth -= 1;
            }
            _ if depth > 0 => {}
            '<' | '>' => tok.boundary(),
            _ => tok.push(base + i, c),
        }
    }
    tok.boundary();
}

fn is_dash(c: char) -> bool {
    matches!(c, '-' | '\u{2010}'..='\u{2015}' | '\u{2212}' | '\u{FE58}' | '\u{FE63}' | '\u{FF0D}')
}

fn is_apostrophe(c: char) -> bool {
    matches!(c, '\'' | '\u{2019}' | '\u{02BC}')
}

struct Tokenizer {
    opts: CleanOptions,
    // (byte start, byte end, normalized chars) per kept source char
    pending: Vec<(usize, usize, Vec<char>)>,
    out: ProvidedTranscript,
}

impl Tokenizer {
    fn new(opts: CleanOptions) -> Self {
        Tokenizer {
            opts,
            pending: Vec::new(),
            out: ProvidedTranscript::default(),
        }
    }

    fn feed(&mut self, text: &str, base: usize) {
        for (i, c) in text.char_indices() {
            self.push(base + i, c);
        }
        self.boundary();
    }

    fn push(&mut self, at: usize, c: char) {
        if c.is_whitespace() || is_dash(c) {
            self.boundary();
        } else if is_apostrophe(c) {
            if self.opts.keep_apostrophes {
                self.pending.push((at, at + c.len_utf8(), vec!['\'']));
            }
        } else if c.is_alphanumeric() {
            let lowered: Vec<char> = c.to_lowercase().filter(|l| l.is_alphanumeric()).collect();
            if !lowered.is_empty() {
                self.pending.push((at, at + c.len_utf8(), lowered));
            }
        }
    }

    fn boundary(&mut self) {
        let is_apos = |p: &(usize, usize, Vec<char>)| p.2.as_slice() == ['\''];
        let first = self.pending.iter().position(|p| !is_apos(p));
        let last = self.pending.iter().rposition(|p| !is_apos(p));
        if let (Some(first), Some(last)) = (first, last) {
            let kept = &self.pending[first..=last];
            let token: String = kept.iter().flat_map(|p| p.2.iter()).collect();
            self.out.spans.push(kept[0].0..kept[kept.len() - 1].1);
            self.out.words.push(Word(token));
        }
        self.pending.clear();
    }

    fn finish(mut self) -> ProvidedTranscript {
        self.boundary();
        self.out
    }
}
