//! The `fasa` command line: `align`, `verify`, `eval` and `synth`.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 configuration error,
//! 3 corpus/input error, 4 missing gold annotation.

pub mod align;
pub mod args;
pub mod config;

use std::fmt;
use std::net::ToSocketAddrs;

use anyhow::{anyhow, Context};
use fasa_core::dataset::{load_records, SegmentRecord};
use fasa_core::evalsynth::{au_error, aw_error, generate, write_corpus, EvalError, GoldAnnotation, SynthSpec};
use fasa_core::transcript::FormatHint;
use fasa_core::ErrorRate;
use fasa_verifysvc::{ReviewQueue, Server, VERIFY_FILE};
use serde::Serialize;

pub use align::{cmd_align, RunReport};
use args::{Cli, CleanMode, Command, EvalArgs, SynthArgs};
pub use config::{FileConfig, RunConfig, ServeConfig};

#[derive(Debug)]
pub enum Failure {
    Config(anyhow::Error),
    Corpus(anyhow::Error),
    MissingGold(String),
    Other(anyhow::Error),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Other(_) => 1,
            Failure::Config(_) => 2,
            Failure::Corpus(_) => 3,
            Failure::MissingGold(_) => 4,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(e) => write!(f, "configuration error: {e:#}"),
            Failure::Corpus(e) => write!(f, "{e:#}"),
            Failure::MissingGold(id) => write!(f, "no gold annotation for emitted utterance {id:?}"),
            Failure::Other(e) => write!(f, "{e:#}"),
        }
    }
}

impl std::error::Error for Failure {}

/// Writes to stdout; a closed pipe (`fasa eval | head`) is not an error.
fn out(text: &str) {
    use std::io::Write;
    let mut stdout = std::io::stdout().lock();
    let _ = stdout.write_all(text.as_bytes()).and_then(|()| stdout.flush());
}

pub fn run(cli: Cli) -> Result<(), Failure> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p).map_err(Failure::Config)?,
        None => FileConfig::default(),
    };
    match cli.command {
        Command::Align(a) => {
            let cfg = RunConfig::resolve(a, file).map_err(Failure::Config)?;
            let report = cmd_align(&cfg)?;
            if cfg.json {
                out(&(serde_json::to_string_pretty(&report).expect("report serializes") + "\n"));
            } else {
                out(&align::summary(&report));
            }
            Ok(())
        }
        Command::Verify(v) => cmd_verify(&ServeConfig::resolve(v, file).map_err(Failure::Config)?),
        Command::Eval(e) => cmd_eval(&e),
        Command::Synth(s) => cmd_synth(&s),
    }
}

/// Serves the review queue until interrupted.
pub fn cmd_verify(cfg: &ServeConfig) -> Result<(), Failure> {
    if !cfg.out_dir.join(VERIFY_FILE).is_file() {
        return Err(Failure::Corpus(anyhow!(
            "{} not found; run `fasa align` first",
            cfg.out_dir.join(VERIFY_FILE).display()
        )));
    }
    let queue = ReviewQueue::open(&cfg.out_dir).map_err(|e| Failure::Corpus(e.into()))?;
    let addr = (cfg.bind.as_str(), cfg.port)
        .to_socket_addrs()
        .ok()
        .and_then(|mut a| a.next())
        .ok_or_else(|| Failure::Config(anyhow!("cannot resolve bind address {}", cfg.bind)))?;
    let pending = queue.pending_count();
    let server = Server::start(queue, addr, cfg.ui.clone())
        .with_context(|| format!("cannot listen on {addr}"))
        .map_err(Failure::Other)?;
    println!("listening on {}", server.url());
    log::info!("{pending} items pending review");
    server.wait_for_signal().map_err(|e| Failure::Other(e.into()))?;
    let queue = server.stop().map_err(|e| Failure::Other(e.into()))?;
    if cfg.export_on_exit {
        let q = queue.lock().unwrap_or_else(|p| p.into_inner());
        let summary = q.export().map_err(|e| Failure::Other(e.into()))?;
        println!(
            "exported {} records ({} reviewed) to {}",
            summary.records,
            summary.added,
            summary.path.display()
        );
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateJson {
    pub total: usize,
    pub errors: usize,
    pub rate: f64,
    pub percent: String,
}

impl From<&ErrorRate> for RateJson {
    fn from(r: &ErrorRate) -> Self {
        RateJson {
            total: r.total,
            errors: r.errors,
            rate: r.rate,
            percent: format!("{:.2}%", r.percent()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalRow {
    pub label: String,
    pub au: RateJson,
    pub aw: RateJson,
}

pub fn evaluate(label: &str, emitted: &[SegmentRecord], gold: &GoldAnnotation) -> Result<(ErrorRate, ErrorRate), Failure> {
    let missing = |e: EvalError| match e {
        EvalError::MissingGold(id) => Failure::MissingGold(id),
        other => Failure::Corpus(other.into()),
    };
    let au = au_error(emitted, gold).map_err(missing)?;
    let aw = aw_error(emitted, gold).map_err(missing)?;
    log::debug!("{label}: AU {au}, AW {aw}");
    Ok((au, aw))
}

/// Rows in the layout of the usual AU/AW comparison table.
pub fn format_table(rows: &[(String, ErrorRate, ErrorRate)]) -> String {
    let mut s = format!(
        "{:<8} {:>10} {:>14} {:>10} {:>14}\n",
        "", "AU aligned", "AU errors", "AW words", "AW errors"
    );
    for (label, au, aw) in rows {
        s += &format!(
            "{:<8} {:>10} {:>14} {:>10} {:>14}\n",
            label,
            au.total,
            au.to_string(),
            aw.total,
            aw.to_string()
        );
    }
    s
}

pub fn cmd_eval(args: &EvalArgs) -> Result<(), Failure> {
    let emitted = load_records(&args.manifest).map_err(|e| Failure::Corpus(e.into()))?;
    let gold = GoldAnnotation::load(&args.gold).map_err(|e| Failure::Corpus(e.into()))?;
    let (au, aw) = evaluate(&args.label, &emitted, &gold)?;
    if args.json {
        let row = EvalRow {
            label: args.label.clone(),
            au: (&au).into(),
            aw: (&aw).into(),
        };
        out(&(serde_json::to_string_pretty(&row).expect("row serializes") + "\n"));
    } else {
        out(&format_table(&[(args.label.clone(), au, aw)]));
    }
    Ok(())
}

fn synth_spec(args: &SynthArgs) -> anyhow::Result<SynthSpec> {
    let mut spec = match &args.spec {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => SynthSpec::default(),
    };
    macro_rules! set {
        ($($field:ident),*) => {$(
            if let Some(v) = args.$field {
                spec.$field = v;
            }
        )*};
    }
    set!(segments, recordings, prefix_drop_frac, untranscribed_frac, annotation_noise_rate);
    if let Some(v) = args.substitution {
        spec.asr_noise.substitution = v;
    }
    if let Some(v) = args.insertion {
        spec.asr_noise.insertion = v;
    }
    if let Some(v) = args.deletion {
        spec.asr_noise.deletion = v;
    }
    spec.block_shuffle |= args.block_shuffle;
    if let Some(f) = args.format {
        spec.format = match f {
            CleanMode::Plain => FormatHint::Plain,
            CleanMode::Chat => FormatHint::Chat,
        };
    }
    spec.validate()?;
    Ok(spec)
}

pub fn cmd_synth(args: &SynthArgs) -> Result<(), Failure> {
    let spec = synth_spec(args).map_err(Failure::Config)?;
    let out = generate(&spec, args.seed).map_err(|e| Failure::Config(e.into()))?;
    let paths = write_corpus(&out, &args.out).map_err(|e| Failure::Other(e.into()))?;
    println!(
        "wrote {} segments in {} recordings to {}",
        out.corpus.segments.len(),
        out.corpus.recordings.len(),
        paths.corpus_dir.display()
    );
    Ok(())
}
