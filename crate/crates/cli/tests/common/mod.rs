#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn fasa() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_fasa"));
    c.env("RUST_LOG", "warn");
    c
}

pub fn run(args: &[&str]) -> Output {
    fasa().args(args).output().expect("fasa runs")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().unwrap_or(-1)
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Runs `fasa synth` into `dir` with extra flags; panics on failure.
pub fn synth(dir: &Path, seed: u64, extra: &[&str]) {
    let seed = seed.to_string();
    let mut args = vec!["synth", "--out", s(dir), "--seed", &seed];
    args.extend_from_slice(extra);
    let out = run(&args);
    assert_eq!(code(&out), 0, "synth failed: {}", stderr(&out));
}

/// `fasa align` over a synthesized directory with its own hypotheses.
pub fn align(synth_dir: &Path, out: &Path, extra: &[&str]) -> Output {
    let corpus = synth_dir.join("corpus");
    let hyp = synth_dir.join("hypotheses.json");
    let mut args = vec!["align", "--corpus", s(&corpus), "--out", s(out), "--asr-hyp", s(&hyp)];
    args.extend_from_slice(extra);
    run(&args)
}

pub fn read_lines(path: &Path) -> Vec<serde_json::Value> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

pub fn report(out: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("run_report.json")).unwrap()).unwrap()
}

pub fn files_in(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    v.sort();
    v
}
