//! Command dispatch and reports. Exit codes: 0 all checks passed, 1 some
//! check failed, 2 bad input, 3 the fixed-point iteration collapsed.

use crate::model::Model;
use crate::proof::{check_proof, Calculus, Limits, Outcome, Prover};
use crate::semantics::{persistence_check, validate_structure, Evaluator, Point};
use crate::syntax::{parse_formula, parse_sequent, Formula, SentenceEnv, Universe};
use crate::truth::{Cond, Engine, RunOptions, TruthError};
use clap::{Parser, Subcommand, ValueEnum};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_COLLAPSE: i32 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Record,
}

#[derive(Parser, Debug)]
#[command(name = "n3truth", version, about = "Kripkean naive-truth fixed points over N3 supervaluation structures")]
pub struct Cli {
    #[arg(long, value_enum, default_value = "text", global = true)]
    pub format: Format,
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// Check structure, frame and persistence.
    Validate { model: PathBuf },
    /// Truth value of a sentence at every interpretation (and world).
    Eval {
        model: PathBuf,
        #[arg(long)]
        formula: String,
    },
    /// Like `eval`, but the model must carry a frame.
    ModalEval {
        model: PathBuf,
        #[arg(long)]
        formula: String,
    },
    /// Backward proof search for a sequent `G1, G2 => D1, D2`.
    Prove {
        #[arg(long, default_value = "n3")]
        calculus: String,
        #[arg(long)]
        sequent: String,
        #[arg(long)]
        identity: bool,
        /// vocabulary and named sentences; otherwise names are declared on the fly
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long, default_value_t = 0)]
        cut_depth: usize,
    },
    /// Iterate theta/Theta to a fixed point (or a collapse).
    Fixpoint {
        model: PathBuf,
        #[arg(long)]
        cond: Option<String>,
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long)]
        trace: bool,
        #[arg(long)]
        modal: bool,
    },
    /// Naivety check on a saved fixed-point record.
    Naivety { record: PathBuf },
    /// Principles (a)-(k) on a saved fixed-point record.
    Principles { record: PathBuf },
    /// Both sides of the global deduction theorem on a saved record.
    Dedthm {
        record: PathBuf,
        /// comma-separated premises
        #[arg(long, default_value = "")]
        gamma: String,
        #[arg(long)]
        phi: Option<String>,
        #[arg(long)]
        psi: Option<String>,
        /// check this many random triples from the universe instead
        #[arg(long)]
        random: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Serialize, Debug)]
pub struct Report {
    pub command: String,
    pub model: Option<String>,
    pub digest: Option<String>,
    pub verdict: String,
    pub body: Value,
    pub timing_ms: u128,
}

pub struct RunOutput {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

struct Fail(i32, String);

fn input<E: std::fmt::Display>(e: E) -> Fail {
    Fail(EXIT_INPUT, e.to_string())
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> RunOutput
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            return if code == EXIT_OK {
                RunOutput { stdout: text, stderr: String::new(), code }
            } else {
                RunOutput { stdout: String::new(), stderr: text, code }
            };
        }
    };
    let start = Instant::now();
    match dispatch(&cli.cmd) {
        Ok((mut rep, code)) => {
            rep.timing_ms = start.elapsed().as_millis();
            RunOutput { stdout: render(&rep, cli.format), stderr: String::new(), code }
        }
        Err(Fail(code, msg)) => RunOutput { stdout: String::new(), stderr: format!("error: {}\n", msg), code },
    }
}

pub fn render(rep: &Report, fmt: Format) -> String {
    match fmt {
        Format::Record => serde_json::to_string_pretty(rep).expect("report serializes") + "\n",
        Format::Text => {
            let mut out = format!("{}: {}\n", rep.command, rep.verdict);
            if let Some(m) = &rep.model {
                out += &format!("model: {}\n", m);
            }
            text_value(&rep.body, 0, &mut out);
            out += &format!("timing_ms: {}\n", rep.timing_ms);
            out
        }
    }
}

fn text_value(v: &Value, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                match x {
                    Value::Object(_) | Value::Array(_) if !is_flat(x) => {
                        out.push_str(&format!("{}{}:\n", pad, k));
                        text_value(x, indent + 1, out);
                    }
                    _ => out.push_str(&format!("{}{}: {}\n", pad, k, scalar(x))),
                }
            }
        }
        Value::Array(items) => {
            for x in items {
                if is_flat(x) {
                    out.push_str(&format!("{}- {}\n", pad, scalar(x)));
                } else {
                    out.push_str(&format!("{}-\n", pad));
                    text_value(x, indent + 1, out);
                }
            }
        }
        x => out.push_str(&format!("{}{}\n", pad, scalar(x))),
    }
}

fn is_flat(v: &Value) -> bool {
    match v {
        Value::Array(a) => a.is_empty() || (a.len() <= 8 && a.iter().all(|x| !x.is_object() && !x.is_array())),
        Value::Object(m) => m.is_empty(),
        _ => true,
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Array(a) => format!("[{}]", a.iter().map(scalar).collect::<Vec<_>>().join(", ")),
        Value::Object(_) => "{}".into(),
        x => x.to_string(),
    }
}

fn report(command: &str, model: Option<&Path>, digest: Option<&str>, verdict: &str, body: Value) -> Report {
    Report {
        command: command.into(),
        model: model.map(|p| p.display().to_string()),
        digest: digest.map(str::to_string),
        verdict: verdict.into(),
        body,
        timing_ms: 0,
    }
}

fn load(p: &Path) -> Result<Model, Fail> {
    Model::load(p).map_err(input)
}

fn limits(budget: Option<usize>) -> Limits {
    let mut l = RunOptions::default().limits;
    if let Some(b) = budget {
        l.max_nodes = b;
    }
    l
}

fn dispatch(cmd: &Cmd) -> Result<(Report, i32), Fail> {
    match cmd {
        Cmd::Validate { model } => validate(model),
        Cmd::Eval { model, formula } => eval(model, formula, false),
        Cmd::ModalEval { model, formula } => eval(model, formula, true),
        Cmd::Prove { calculus, sequent, identity, model, budget, cut_depth } => {
            prove(calculus, sequent, *identity, model.as_deref(), *budget, *cut_depth)
        }
        Cmd::Fixpoint { model, cond, depth, budget, trace, modal } => {
            fixpoint(model, cond.as_deref(), *depth, *budget, *trace, *modal)
        }
        Cmd::Naivety { record } => naivety(record),
        Cmd::Principles { record } => principles(record),
        Cmd::Dedthm { record, gamma, phi, psi, random, seed } => {
            dedthm(record, gamma, phi.as_deref(), psi.as_deref(), *random, *seed)
        }
    }
}

fn validate(path: &Path) -> Result<(Report, i32), Fail> {
    let m = load(path)?;
    let mut problems: Vec<String> = validate_structure(&m.structure, &m.env).iter().map(|v| v.to_string()).collect();
    if let Some(fr) = &m.structure.frame {
        problems.extend(crate::modal::validate_frame(fr).iter().map(|v| v.to_string()));
    }
    let mut persistence = Vec::new();
    if problems.is_empty() {
        let u = m.universe(None).map_err(input)?;
        persistence = persistence_check(&m.structure, &m.env, &u).iter().map(|p| format!("{:?}", p)).collect();
    }
    let ok = problems.is_empty() && persistence.is_empty();
    let body = json!({ "violations": problems, "persistence_counterexamples": persistence });
    let verdict = if ok { "valid" } else { "invalid" };
    Ok((report("validate", Some(path), Some(&m.digest), verdict, body), if ok { EXIT_OK } else { EXIT_CHECK }))
}

fn eval(path: &Path, text: &str, modal: bool) -> Result<(Report, i32), Fail> {
    let m = load(path)?;
    if modal && m.structure.frame.is_none() {
        return Err(Fail(EXIT_INPUT, "model has no frame".into()));
    }
    let f = m.env.canonical(&parse_formula(text, &m.env).map_err(input)?);
    let ev = Evaluator::new(&m.structure, &m.env);
    let mut cells = Vec::new();
    for j in 0..m.structure.n_interps() {
        for w in 0..m.structure.n_worlds() {
            let v = ev.value(Point { w, j, m: None }, &f).map_err(input)?;
            let mut cell = json!({ "interp": m.structure.interps[j].name, "value": v.to_string() });
            if let Some(fr) = &m.structure.frame {
                cell["world"] = json!(fr.worlds[w]);
            }
            cells.push(cell);
        }
    }
    let body = json!({ "formula": f.to_string(), "values": cells });
    let name = if modal { "modal-eval" } else { "eval" };
    Ok((report(name, Some(path), Some(&m.digest), "evaluated", body), EXIT_OK))
}

fn prove(
    calc: &str,
    sequent: &str,
    identity: bool,
    model: Option<&Path>,
    budget: Option<usize>,
    cut_depth: usize,
) -> Result<(Report, i32), Fail> {
    let c = Calculus::parse(calc).ok_or_else(|| Fail(EXIT_INPUT, format!("unknown calculus `{}`", calc)))?;
    let (mut env, digest) = match model {
        Some(p) => {
            let m = load(p)?;
            (m.env, Some(m.digest))
        }
        None => (SentenceEnv::new(), None),
    };
    env.modal = true;
    let (gamma, delta) = parse_sequent(sequent, &mut env, model.is_none()).map_err(input)?;
    let gamma: Vec<Formula> = gamma.iter().map(|f| env.canonical(f)).collect();
    let delta: Vec<Formula> = delta.iter().map(|f| env.canonical(f)).collect();
    let mut lim = limits(budget);
    lim.cut_depth = cut_depth;
    let pool: Vec<Formula> = if cut_depth > 0 {
        let u = crate::syntax::build_universe(&env, &[gamma.clone(), delta.clone()].concat(), 1, crate::syntax::DEFAULT_CAP)
            .map_err(input)?;
        u.iter().cloned().collect()
    } else {
        Vec::new()
    };
    let mut p = Prover::new(c, identity, &env, lim).with_cut_pool(pool);
    let (verdict, tree, code) = match p.prove(&gamma, &delta) {
        Outcome::Proved(t) => ("proved", t, EXIT_OK),
        Outcome::NotProved => ("not-proved", None, EXIT_CHECK),
        Outcome::Unknown => ("indeterminate", None, EXIT_CHECK),
    };
    let mut body = json!({
        "calculus": c.name(),
        "identity": identity,
        "sequent": format!("{} => {}", list(&gamma), list(&delta)),
        "nodes": p.nodes_used(),
    });
    if let Some(t) = &tree {
        body["checked"] = json!(check_proof(&env, c, identity, t).is_ok());
        body["tree_text"] = json!(t.to_text().lines().collect::<Vec<_>>());
        body["tree"] = t.to_json();
    }
    Ok((report("prove", model, digest.as_deref(), verdict, body), code))
}

fn list(fs: &[Formula]) -> String {
    fs.iter().map(|f| f.to_string()).collect::<Vec<_>>().join(", ")
}

fn fixpoint(
    path: &Path,
    cond: Option<&str>,
    depth: Option<usize>,
    budget: Option<usize>,
    trace: bool,
    modal: bool,
) -> Result<(Report, i32), Fail> {
    let m = load(path)?;
    if modal && m.structure.frame.is_none() {
        return Err(Fail(EXIT_INPUT, "--modal needs a model with a frame".into()));
    }
    let cond = match cond {
        Some(c) => Cond::parse(c).ok_or_else(|| Fail(EXIT_INPUT, format!("unknown condition `{}`", c)))?,
        None => m.cond.unwrap_or(Cond::Nve),
    };
    let depth = depth.unwrap_or(m.depth);
    let u = m.universe(Some(depth)).map_err(input)?;
    let opts = RunOptions { limits: limits(budget.or(m.budget)), ..RunOptions::default() };
    let r = crate::truth::iterate_fixed_point(&m.structure, &m.env, &u, cond, &opts).map_err(input)?;
    let code = if !r.is_fixed_point() {
        EXIT_COLLAPSE
    } else if r.verification.as_ref().is_some_and(|v| v.theta_fixes_g && v.big_theta_fixes_z) {
        EXIT_OK
    } else {
        EXIT_CHECK
    };
    let mut res = serde_json::to_value(&r).expect("result serializes");
    if !trace {
        if let Value::Object(o) = &mut res {
            if let Some(Value::Array(st)) = o.get("stages") {
                let n = st.len();
                o.insert("stages".into(), json!(n));
            }
        }
    }
    let body = json!({
        "cond": cond.name(),
        "depth": depth,
        "budget": opts.limits.max_nodes,
        "universe_size": u.len(),
        "result": res,
    });
    Ok((report("fixpoint", Some(path), Some(&m.digest), &r.status, body), code))
}

/// A saved fixpoint record reopened against its model.
struct Reopened {
    path: PathBuf,
    model: Model,
    universe: Universe,
    cond: Cond,
    budget: usize,
    g: Vec<crate::truth::CellRecord>,
}

fn reopen(record: &Path) -> Result<Reopened, Fail> {
    let text = std::fs::read_to_string(record).map_err(|e| input(format!("{}: {}", record.display(), e)))?;
    let v: Value = serde_json::from_str(&text).map_err(input)?;
    if v["command"] != "fixpoint" {
        return Err(input("not a fixpoint record"));
    }
    if v["verdict"] != "fixed-point" {
        return Err(input("record does not hold a fixed point"));
    }
    let mp = v["model"].as_str().ok_or_else(|| input("record has no model path"))?;
    let mut path = PathBuf::from(mp);
    if !path.exists() {
        if let Some(dir) = record.parent() {
            path = dir.join(mp);
        }
    }
    let model = load(&path)?;
    if v["digest"].as_str() != Some(model.digest.as_str()) {
        return Err(input("model changed since the record was written"));
    }
    let body = &v["body"];
    let cond = body["cond"].as_str().and_then(Cond::parse).ok_or_else(|| input("record has no condition"))?;
    let depth = body["depth"].as_u64().ok_or_else(|| input("record has no depth"))? as usize;
    let budget = body["budget"].as_u64().unwrap_or(20_000) as usize;
    let universe = model.universe(Some(depth)).map_err(input)?;
    let g = serde_json::from_value::<Vec<RecordCell>>(body["result"]["valuation"].clone()).map_err(input)?;
    let g = g.into_iter().map(|c| crate::truth::CellRecord { world: c.world, interp: c.interp, sentences: c.sentences }).collect();
    Ok(Reopened { path, model, universe, cond, budget, g })
}

#[derive(serde::Deserialize)]
struct RecordCell {
    world: String,
    interp: String,
    sentences: Vec<String>,
}

fn with_family<R>(
    o: &Reopened,
    f: impl FnOnce(&mut Engine<'_>, &crate::truth::Family<'_>) -> R,
) -> Result<R, Fail> {
    let mut e = Engine::new(&o.model.structure, &o.model.env, &o.universe, limits(Some(o.budget)));
    let g = e.from_records(&o.g).map_err(input)?;
    let fam = e.family_at(o.cond, &g, RunOptions::default().max_family).map_err(|x: TruthError| input(x))?;
    Ok(f(&mut e, &fam))
}

fn naivety(record: &Path) -> Result<(Report, i32), Fail> {
    let o = reopen(record)?;
    let failures = with_family(&o, |e, fam| e.check_naivety(fam))?;
    let ok = failures.is_empty();
    let body = json!({ "cond": o.cond.name(), "universe_size": o.universe.len(), "failures": failures });
    let verdict = if ok { "naive" } else { "failures" };
    Ok((report("naivety", Some(&o.path), Some(&o.model.digest), verdict, body), if ok { EXIT_OK } else { EXIT_CHECK }))
}

fn principles(record: &Path) -> Result<(Report, i32), Fail> {
    let o = reopen(record)?;
    let (reps, kss) = with_family(&o, |e, fam| {
        let k = e.generated_substructure(fam);
        (e.check_principles(o.cond, &k.sub), (k.f_retained, k.reflexive, k.theta_fixed))
    })?;
    let ok = reps.iter().all(|r| !r.asserted || r.violations.is_empty());
    let body = json!({
        "cond": o.cond.name(),
        "substructure": { "f_retained": kss.0, "reflexive": kss.1, "theta_fixed": kss.2 },
        "principles": reps,
    });
    let verdict = if ok { "asserted-hold" } else { "violations" };
    Ok((report("principles", Some(&o.path), Some(&o.model.digest), verdict, body), if ok { EXIT_OK } else { EXIT_CHECK }))
}

fn dedthm(
    record: &Path,
    gamma: &str,
    phi: Option<&str>,
    psi: Option<&str>,
    random: Option<usize>,
    seed: u64,
) -> Result<(Report, i32), Fail> {
    let o = reopen(record)?;
    let env = &o.model.env;
    let parse = |t: &str| parse_formula(t, env).map(|f| env.canonical(&f)).map_err(input);
    let mut triples: Vec<(Vec<Formula>, Formula, Formula)> = Vec::new();
    match random {
        Some(n) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let us = o.universe.as_slice();
            if us.is_empty() {
                return Err(input("empty universe"));
            }
            for _ in 0..n {
                let k = rng.gen_range(0..3);
                let g: Vec<Formula> = us.choose_multiple(&mut rng, k).cloned().collect();
                let a = us.choose(&mut rng).unwrap().clone();
                let b = us.choose(&mut rng).unwrap().clone();
                triples.push((g, a, b));
            }
        }
        None => {
            let (Some(a), Some(b)) = (phi, psi) else { return Err(input("need --phi and --psi, or --random")) };
            let g = gamma.split(',').map(str::trim).filter(|s| !s.is_empty()).map(parse).collect::<Result<Vec<_>, _>>()?;
            triples.push((g, parse(a)?, parse(b)?));
        }
    }
    let rows = with_family(&o, |e, fam| {
        let k = e.generated_substructure(fam);
        triples
            .iter()
            .map(|(g, a, b)| {
                let (l, r) = e.deduction_theorem(&k.sub, g, a, b);
                json!({ "gamma": list(g), "phi": a.to_string(), "psi": b.to_string(), "left": l, "right": r })
            })
            .collect::<Vec<_>>()
    })?;
    let disagree = rows.iter().filter(|r| r["left"] != r["right"]).count();
    let body = json!({ "cond": o.cond.name(), "checked": rows.len(), "disagreements": disagree, "cases": rows });
    let verdict = if disagree == 0 { "agree" } else { "disagree" };
    Ok((report("dedthm", Some(&o.path), Some(&o.model.digest), verdict, body), if disagree == 0 { EXIT_OK } else { EXIT_CHECK }))
}
