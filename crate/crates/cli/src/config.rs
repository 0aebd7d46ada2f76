//! Resolution of flags and config file into run settings.
//!
//! The config file is flat TOML whose keys are the long flag names
//! (`sigma-a = 0.2`, `asr-hyp = "hyp.json"`); a flag given on the command
//! line always wins. Relative paths in the file are taken relative to the
//! file itself.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use fasa_core::aligncore::{PgcMode, WindowPolicy, DEFAULT_PGC_REL, DEFAULT_RHO, DEFAULT_SIGMA_A, DEFAULT_SIGMA_I};
use fasa_core::Thresholds;
use serde::Deserialize;

use crate::args::{AlignArgs, CleanMode, VerifyArgs};

pub const DEFAULT_PORT: u16 = 8765;
pub const DEFAULT_BIND: &str = "127.0.0.1";

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct FileConfig {
    pub corpus: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub sigma_a: Option<f64>,
    pub sigma_i: Option<f64>,
    pub pgc_rel: Option<f64>,
    pub pgc_abs_words: Option<usize>,
    pub rho: Option<f64>,
    pub paper_strict_windows: Option<bool>,
    pub clean_mode: Option<CleanMode>,
    pub asr_hyp: Option<PathBuf>,
    pub asr_cmd: Option<String>,
    pub pgc_hyp: Option<PathBuf>,
    pub pgc_cmd: Option<String>,
    pub no_pgc: Option<bool>,
    pub workers: Option<usize>,
    pub strict: Option<bool>,
    pub json: Option<bool>,
    pub port: Option<u16>,
    pub bind: Option<String>,
    pub ui: Option<PathBuf>,
    pub export_on_exit: Option<bool>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg: FileConfig = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.corpus, &mut cfg.out, &mut cfg.asr_hyp, &mut cfg.pgc_hyp, &mut cfg.ui]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum AsrSource {
    HypFile(PathBuf),
    Command(String),
}

#[derive(Clone, Debug, PartialEq)]
pub enum PgcSource {
    Off,
    HypFile(PathBuf),
    Command(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub corpus_dir: PathBuf,
    pub out_dir: PathBuf,
    pub thresholds: Thresholds,
    pub clean_mode: CleanMode,
    pub asr: AsrSource,
    pub pgc: PgcSource,
    pub workers: usize,
    pub strict: bool,
    pub json: bool,
}

impl RunConfig {
    /// Everything here is a configuration error (exit code 2).
    pub fn resolve(args: AlignArgs, file: FileConfig) -> Result<Self> {
        let corpus_dir = args.corpus.or(file.corpus).ok_or_else(|| anyhow!("--corpus is required"))?;
        let out_dir = args.out.or(file.out).ok_or_else(|| anyhow!("--out is required"))?;
        if same_dir(&corpus_dir, &out_dir) {
            bail!("--out must differ from --corpus");
        }

        let sigma_a = args.sigma_a.or(file.sigma_a).unwrap_or(DEFAULT_SIGMA_A);
        let sigma_i = args.sigma_i.or(file.sigma_i).unwrap_or(DEFAULT_SIGMA_I);
        let rho = args.rho.or(file.rho).unwrap_or(DEFAULT_RHO);
        // a relative flag overrides an absolute setting from the file and
        // vice versa
        let (pgc_rel, pgc_abs) = match (args.pgc_rel, args.pgc_abs_words) {
            (Some(r), _) => (r, None),
            (None, Some(a)) => (DEFAULT_PGC_REL, Some(a)),
            (None, None) => (file.pgc_rel.unwrap_or(DEFAULT_PGC_REL), file.pgc_abs_words),
        };
        let mut thresholds = Thresholds::from_f64(sigma_a, sigma_i, pgc_rel, rho)?;
        if args.paper_strict_windows || file.paper_strict_windows.unwrap_or(false) {
            thresholds = thresholds.with_windows(WindowPolicy::PaperStrict);
        }
        if let Some(max_words) = pgc_abs {
            thresholds = thresholds.with_pgc_mode(PgcMode::Absolute { max_words });
        }

        let asr = match (args.asr_hyp, args.asr_cmd) {
            (Some(p), None) => AsrSource::HypFile(p),
            (None, Some(c)) => AsrSource::Command(c),
            (Some(_), Some(_)) => unreachable!("clap rejects both"),
            (None, None) => match (file.asr_hyp, file.asr_cmd) {
                (Some(p), None) => AsrSource::HypFile(p),
                (None, Some(c)) => AsrSource::Command(c),
                (Some(_), Some(_)) => bail!("config sets both asr-hyp and asr-cmd"),
                (None, None) => bail!("one of --asr-hyp or --asr-cmd is required"),
            },
        };
        if let AsrSource::Command(c) = &asr {
            check_template(c, "--asr-cmd")?;
        }

        let pgc = if args.no_pgc {
            PgcSource::Off
        } else if let Some(p) = args.pgc_hyp {
            PgcSource::HypFile(p)
        } else if let Some(c) = args.pgc_cmd {
            PgcSource::Command(c)
        } else {
            let set = [file.no_pgc == Some(true), file.pgc_hyp.is_some(), file.pgc_cmd.is_some()];
            if set.iter().filter(|b| **b).count() > 1 {
                bail!("config sets more than one of no-pgc, pgc-hyp, pgc-cmd");
            }
            match (file.pgc_hyp, file.pgc_cmd) {
                (Some(p), _) => PgcSource::HypFile(p),
                (_, Some(c)) => PgcSource::Command(c),
                _ => PgcSource::Off,
            }
        };
        if let PgcSource::Command(c) = &pgc {
            check_template(c, "--pgc-cmd")?;
        }

        let workers = match args.workers.or(file.workers) {
            Some(0) => bail!("--workers must be at least 1"),
            Some(n) => n,
            None => std::thread::available_parallelism().map_or(1, |n| n.get()),
        };

        Ok(RunConfig {
            corpus_dir,
            out_dir,
            thresholds,
            clean_mode: args.clean_mode.or(file.clean_mode).unwrap_or(CleanMode::Plain),
            asr,
            pgc,
            workers,
            strict: args.strict || file.strict.unwrap_or(false),
            json: args.json || file.json.unwrap_or(false),
        })
    }
}

fn check_template(tpl: &str, flag: &str) -> Result<()> {
    if !tpl.contains("{audio}") {
        bail!("{flag} template must contain {{audio}}");
    }
    Ok(())
}

fn same_dir(a: &Path, b: &Path) -> bool {
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(x), Ok(y)) => x == y,
        _ => a == b,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ServeConfig {
    pub out_dir: PathBuf,
    pub bind: String,
    pub port: u16,
    pub ui: Option<PathBuf>,
    pub export_on_exit: bool,
}

impl ServeConfig {
    pub fn resolve(args: VerifyArgs, file: FileConfig) -> Result<Self> {
        Ok(ServeConfig {
            out_dir: args.out.or(file.out).ok_or_else(|| anyhow!("--out is required"))?,
            bind: args.bind.or(file.bind).unwrap_or_else(|| DEFAULT_BIND.to_string()),
            port: args.port.or(file.port).unwrap_or(DEFAULT_PORT),
            ui: args.ui.or(file.ui),
            export_on_exit: args.export_on_exit || file.export_on_exit.unwrap_or(false),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args() -> AlignArgs {
        AlignArgs {
            corpus: Some("c".into()),
            out: Some("o".into()),
            asr_hyp: Some("h.json".into()),
            ..AlignArgs::default()
        }
    }

    fn file(text: &str) -> FileConfig {
        toml::from_str(text).unwrap()
    }

    #[test]
    fn defaults() {
        let cfg = RunConfig::resolve(args(), FileConfig::default()).unwrap();
        assert_eq!(cfg.thresholds, Thresholds::default());
        assert_eq!(cfg.pgc, PgcSource::Off);
        assert_eq!(cfg.clean_mode, CleanMode::Plain);
        assert!(cfg.workers >= 1);
    }

    #[test]
    fn flags_win_over_file() {
        let f = file("sigma-a = 0.1\nsigma-i = 0.4\nworkers = 3\nclean-mode = \"chat\"\npgc-hyp = \"p.json\"");
        let a = AlignArgs {
            sigma_a: Some(0.2),
            no_pgc: true,
            ..args()
        };
        let cfg = RunConfig::resolve(a, f).unwrap();
        assert_eq!((cfg.thresholds.sigma_a, cfg.thresholds.sigma_i), (0.2, 0.4));
        assert_eq!((cfg.workers, cfg.clean_mode), (3, CleanMode::Chat));
        assert_eq!(cfg.pgc, PgcSource::Off);
    }

    #[test]
    fn invalid_settings() {
        let bad = |a: AlignArgs, f: &str| RunConfig::resolve(a, file(f)).is_err();
        assert!(bad(AlignArgs { sigma_a: Some(0.6), sigma_i: Some(0.5), ..args() }, ""));
        assert!(bad(AlignArgs { asr_hyp: None, ..args() }, ""));
        assert!(bad(AlignArgs { asr_hyp: None, ..args() }, "asr-hyp = \"a\"\nasr-cmd = \"x {audio}\""));
        assert!(bad(AlignArgs { asr_hyp: None, asr_cmd: Some("whisper".into()), ..args() }, ""));
        assert!(bad(AlignArgs { workers: Some(0), ..args() }, ""));
        assert!(bad(AlignArgs { out: Some("c".into()), ..args() }, ""));
        assert!(toml::from_str::<FileConfig>("sigma_a = 0.1").is_err());
    }

    #[test]
    fn pgc_modes() {
        let cfg = RunConfig::resolve(AlignArgs { pgc_abs_words: Some(2), ..args() }, file("pgc-rel = 0.3")).unwrap();
        assert_eq!(cfg.thresholds.pgc_mode, PgcMode::Absolute { max_words: 2 });
        let cfg = RunConfig::resolve(AlignArgs { pgc_rel: Some(0.4), ..args() }, file("pgc-abs-words = 2")).unwrap();
        assert_eq!((cfg.thresholds.pgc_mode, cfg.thresholds.pgc_rel), (PgcMode::Relative, 0.4));
    }
}
