//! Replays the `.expect` files next to each corpus model through the
//! compiled binary.

use std::path::{Path, PathBuf};
use std::process::Command;

pub const CORPUS: [&str; 5] = ["liar", "curry", "truthteller", "contraposition", "modal-toy"];

pub struct Run {
    pub args: Vec<String>,
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_n3truth")
}

pub fn run(args: &[String]) -> Run {
    let out = Command::new(bin()).args(args).output().expect("binary runs");
    Run {
        args: args.to_vec(),
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

pub struct Expectation {
    pub line: usize,
    pub code: i32,
    pub verdict: String,
    pub args: Vec<String>,
    pub needle: Option<String>,
}

pub fn expectations(name: &str) -> Vec<Expectation> {
    let path = super::models_dir().join(format!("{name}.expect"));
    let text = std::fs::read_to_string(&path).expect("expect file");
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let l = raw.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = l.split(" :: ").collect();
        let mut head = parts[0].split_whitespace();
        let code = head.next().and_then(|c| c.parse().ok()).expect("exit code");
        let verdict = head.next().expect("verdict").to_string();
        let args = shlex::split(parts[1]).expect("arguments");
        out.push(Expectation { line: i + 1, code, verdict, args, needle: parts.get(2).map(|s| s.to_string()) });
    }
    out
}

/// Expands `{model}` and `{record:X}`; records are written once per
/// condition into `dir`.
pub fn expand(name: &str, args: &[String], dir: &Path) -> Vec<String> {
    let model = super::models_dir().join(format!("{name}.model"));
    let model_s = model.to_string_lossy().into_owned();
    args.iter()
        .map(|a| {
            if a == "{model}" {
                model_s.clone()
            } else if let Some(cond) = a.strip_prefix("{record:").and_then(|s| s.strip_suffix('}')) {
                record(&model, cond, dir).to_string_lossy().into_owned()
            } else {
                a.clone()
            }
        })
        .collect()
}

fn record(model: &Path, cond: &str, dir: &Path) -> PathBuf {
    let stem = model.file_stem().unwrap().to_string_lossy();
    let path = dir.join(format!("{stem}-{cond}.record"));
    if !path.exists() {
        let text = std::fs::read_to_string(model).unwrap();
        let mut args = vec!["--format".to_string(), "record".into(), "fixpoint".into(), model.to_string_lossy().into()];
        args.extend(["--cond".to_string(), cond.to_string()]);
        if text.lines().any(|l| l.starts_with("world ")) {
            args.push("--modal".into());
        }
        let r = run(&args);
        std::fs::write(&path, r.stdout).unwrap();
    }
    path
}

/// First line of a text report: `<command>: <verdict>`.
pub fn verdict(stdout: &str) -> String {
    stdout.lines().next().and_then(|l| l.split_once(": ")).map(|(_, v)| v.trim().to_string()).unwrap_or_default()
}

/// Runs every expectation of one model; returns failures as messages.
pub fn replay(name: &str, dir: &Path) -> (usize, Vec<String>) {
    let mut bad = Vec::new();
    let ex = expectations(name);
    for e in &ex {
        let args = expand(name, &e.args, dir);
        let r = run(&args);
        let v = verdict(&r.stdout);
        let mut why = Vec::new();
        if r.code != e.code {
            why.push(format!("exit {} (want {})", r.code, e.code));
        }
        if v != e.verdict {
            why.push(format!("verdict `{v}` (want `{}`)", e.verdict));
        }
        if let Some(n) = &e.needle {
            if !r.stdout.contains(n.as_str()) {
                why.push(format!("report lacks `{n}`"));
            }
        }
        if !why.is_empty() {
            bad.push(format!("{name}.expect:{}: {} [{}]", e.line, why.join(", "), r.stderr.trim()));
        }
    }
    (ex.len(), bad)
}

/// Drops the timing field so two reports can be compared.
pub fn without_timing(report: &str) -> String {
    report.lines().filter(|l| !l.trim_start().starts_with("timing_ms") && !l.contains("\"timing_ms\"")).collect::<Vec<_>>().join("\n")
}
