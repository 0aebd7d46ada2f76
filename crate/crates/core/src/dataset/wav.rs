//! Sample-accurate slicing of 16 kHz / 16-bit / mono PCM WAV.

use std::fs::File;
use std::io::{BufReader, Cursor, Read, Seek, SeekFrom};
use std::ops::Range;
use std::path::{Path, PathBuf};

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};
use thiserror::Error;

pub const SAMPLE_RATE: u32 = 16_000;

#[derive(Debug, Error)]
pub enum AudioError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed WAV: {0}")]
    Malformed(String),
    #[error("unsupported format: {0} (expected 16 kHz, 16-bit, mono PCM)")]
    UnsupportedFormat(String),
    #[error("span [{start_s}, {end_s}) s is outside the audio (duration {duration_s} s)")]
    OutOfRange { start_s: f64, end_s: f64, duration_s: f64 },
}

fn spec() -> WavSpec {
    WavSpec {
        channels: 1,
        sample_rate: SAMPLE_RATE,
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    }
}

fn from_hound(err: hound::Error, path: &Path) -> AudioError {
    match err {
        hound::Error::IoError(source) => AudioError::Io {
            path: path.to_path_buf(),
            source,
        },
        hound::Error::Unsupported => AudioError::UnsupportedFormat("unsupported WAV encoding".into()),
        other => AudioError::Malformed(other.to_string()),
    }
}

/// Rounds a timestamp to a sample index, half away from zero.
pub fn sample_index(t_s: f64) -> usize {
    (t_s * SAMPLE_RATE as f64).round() as usize
}

/// Decoded mono PCM samples.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PcmAudio {
    samples: Vec<i16>,
}

impl PcmAudio {
    pub fn from_samples(samples: Vec<i16>) -> Self {
        PcmAudio { samples }
    }

    pub fn open(path: &Path) -> Result<Self, AudioError> {
        let reader = WavReader::open(path).map_err(|e| from_hound(e, path))?;
        Self::from_reader(reader, path)
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, AudioError> {
        let path = Path::new("<memory>");
        let reader = WavReader::new(Cursor::new(bytes)).map_err(|e| from_hound(e, path))?;
        Self::from_reader(reader, path)
    }

    fn from_reader<R: Read>(reader: WavReader<R>, path: &Path) -> Result<Self, AudioError> {
        let (n, mut data) = data_chunk(reader)?;
        Ok(PcmAudio {
            samples: read_samples(&mut data, n, path)?,
        })
    }

    pub fn samples(&self) -> &[i16] {
        &self.samples
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / SAMPLE_RATE as f64
    }

    /// Sample range `[round(start·16000), round(end·16000))`.
    pub fn sample_range(&self, start_s: f64, end_s: f64) -> Result<Range<usize>, AudioError> {
        span_range(self.samples.len(), start_s, end_s)
    }

    /// WAV bytes holding exactly the samples of the span.
    pub fn cut(&self, start_s: f64, end_s: f64) -> Result<Vec<u8>, AudioError> {
        let range = self.sample_range(start_s, end_s)?;
        Ok(encode_wav(&self.samples[range]))
    }

    pub fn to_wav_bytes(&self) -> Vec<u8> {
        encode_wav(&self.samples)
    }

    pub fn write(&self, path: &Path) -> Result<(), AudioError> {
        std::fs::write(path, self.to_wav_bytes()).map_err(|source| AudioError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

pub fn encode_wav(samples: &[i16]) -> Vec<u8> {
    let mut buf = Vec::with_capacity(44 + samples.len() * 2);
    {
        let mut writer = WavWriter::new(Cursor::new(&mut buf), spec()).expect("in-memory WAV header");
        let mut w = writer.get_i16_writer(samples.len() as u32);
        for &s in samples {
            w.write_sample(s);
        }
        w.flush().expect("in-memory WAV write");
        writer.finalize().expect("in-memory WAV finalize");
    }
    buf
}

/// Reads `source` and returns the WAV bytes for `[start_s, end_s)`.
///
/// Only the samples of the span are read from disk.
pub fn cut_segment(source: &Path, start_s: f64, end_s: f64) -> Result<Vec<u8>, AudioError> {
    let reader: WavReader<BufReader<File>> = WavReader::open(source).map_err(|e| from_hound(e, source))?;
    let (n, mut data) = data_chunk(reader)?;
    let range = span_range(n, start_s, end_s)?;
    data.seek(SeekFrom::Current(range.start as i64 * 2))
        .map_err(|e| from_hound(hound::Error::IoError(e), source))?;
    Ok(encode_wav(&read_samples(&mut data, range.len(), source)?))
}

fn span_range(n: usize, start_s: f64, end_s: f64) -> Result<Range<usize>, AudioError> {
    let out_of_range = || AudioError::OutOfRange {
        start_s,
        end_s,
        duration_s: n as f64 / SAMPLE_RATE as f64,
    };
    if !start_s.is_finite() || !end_s.is_finite() || start_s < 0.0 || end_s <= start_s {
        return Err(out_of_range());
    }
    let (a, b) = (sample_index(start_s), sample_index(end_s));
    if a >= b || b > n {
        return Err(out_of_range());
    }
    Ok(a..b)
}

/// Checks the format and returns the sample count and the reader positioned
/// at the first sample.
fn data_chunk<R: Read>(reader: WavReader<R>) -> Result<(usize, R), AudioError> {
    let s = reader.spec();
    if s.sample_format != SampleFormat::Int || s.bits_per_sample != 16 || s.channels != 1 || s.sample_rate != SAMPLE_RATE {
        return Err(AudioError::UnsupportedFormat(format!(
            "{} Hz, {}-bit {:?}, {} channel(s)",
            s.sample_rate, s.bits_per_sample, s.sample_format, s.channels
        )));
    }
    Ok((reader.len() as usize, reader.into_inner()))
}

// hound's per-sample iterator is far slower than one bulk read when the
// calling crate is built without optimizations
fn read_samples<R: Read>(data: &mut R, n: usize, path: &Path) -> Result<Vec<i16>, AudioError> {
    let mut bytes = vec![0u8; n * 2];
    data.read_exact(&mut bytes).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => AudioError::Malformed("data chunk shorter than its header says".into()),
        _ => from_hound(hound::Error::IoError(e), path),
    })?;
    Ok(bytes.chunks_exact(2).map(|b| i16::from_le_bytes([b[0], b[1]])).collect())
}
