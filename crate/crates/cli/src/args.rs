use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

#[derive(Debug, Parser)]
#[command(name = "fasa", version, about = "Force-align noisy transcripts against ASR segments")]
pub struct Cli {
    /// Config file (TOML, keys named like the long flags). Flags win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Align a corpus and write the aligned manifest and review queue.
    Align(AlignArgs),
    /// Serve the review queue of an alignment run.
    Verify(VerifyArgs),
    /// Score an emitted manifest against gold transcripts.
    Eval(EvalArgs),
    /// Generate a synthetic corpus with known ground truth.
    Synth(SynthArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CleanMode {
    Plain,
    Chat,
}

#[derive(Debug, Default, Args)]
pub struct AlignArgs {
    /// Directory of `<name>.wav` files with `<name>.txt` (or `.cha`) transcripts.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub sigma_a: Option<f64>,
    #[arg(long)]
    pub sigma_i: Option<f64>,
    #[arg(long)]
    pub pgc_rel: Option<f64>,
    /// Drop on absolute word-count difference instead of relative.
    #[arg(long, conflicts_with = "pgc_rel")]
    pub pgc_abs_words: Option<usize>,
    /// Longest window as a multiple of the utterance length.
    #[arg(long)]
    pub rho: Option<f64>,
    /// Only consider windows of two or more words.
    #[arg(long)]
    pub paper_strict_windows: bool,
    #[arg(long, value_enum)]
    pub clean_mode: Option<CleanMode>,
    /// Hypothesis JSON covering every corpus file.
    #[arg(long, conflicts_with = "asr_cmd")]
    pub asr_hyp: Option<PathBuf>,
    /// Recognizer command; `{audio}` is replaced by the WAV path.
    #[arg(long)]
    pub asr_cmd: Option<String>,
    /// Second-round hypotheses for the post-generation check.
    #[arg(long, conflicts_with_all = ["pgc_cmd", "no_pgc"])]
    pub pgc_hyp: Option<PathBuf>,
    /// Second-round recognizer, run on each cut segment.
    #[arg(long, conflicts_with = "no_pgc")]
    pub pgc_cmd: Option<String>,
    #[arg(long)]
    pub no_pgc: bool,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Fail on the first bad corpus file instead of skipping it.
    #[arg(long)]
    pub strict: bool,
    /// Print the run report as JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Default, Args)]
pub struct VerifyArgs {
    /// Output directory of an alignment run.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub port: Option<u16>,
    #[arg(long)]
    pub bind: Option<String>,
    /// Built review UI to serve at `/`.
    #[arg(long)]
    pub ui: Option<PathBuf>,
    /// Write final.manifest.jsonl on shutdown.
    #[arg(long)]
    pub export_on_exit: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Emitted manifest (JSONL).
    #[arg(long)]
    pub manifest: PathBuf,
    /// Gold annotation (JSONL of `{"id", "words"}`).
    #[arg(long)]
    pub gold: PathBuf,
    /// Row label in the table.
    #[arg(long, default_value = "FASA")]
    pub label: String,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// JSON synthesis spec; the flags below override its fields.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub segments: Option<usize>,
    #[arg(long)]
    pub recordings: Option<usize>,
    #[arg(long)]
    pub prefix_drop_frac: Option<f64>,
    #[arg(long)]
    pub untranscribed_frac: Option<f64>,
    #[arg(long)]
    pub block_shuffle: bool,
    #[arg(long)]
    pub annotation_noise_rate: Option<f64>,
    /// ASR word substitution rate of the mock recognizer.
    #[arg(long)]
    pub substitution: Option<f64>,
    #[arg(long)]
    pub insertion: Option<f64>,
    #[arg(long)]
    pub deletion: Option<f64>,
    #[arg(long, value_enum)]
    pub format: Option<CleanMode>,
}
