//! Line-oriented model files.
//!
//! ```text
//! # comment
//! predicate P/1 R/2
//! function f/1
//! constant a b              # each constant names its own domain element
//! map f(a) = b
//! sentence lambda := ~T('lambda')
//! interp J0
//! + P(a)                    # extension; `- P(a)` for the anti-extension
//! + P(b) @ w1               # world-specific data (frame models)
//! h J0 J0
//! world w0 w1               # declaring worlds turns on [] and ~>
//! r w0 w1
//! rank w0 w0=0 w1=1
//! seed T('lambda') -> lambda
//! depth 1
//! cond nve
//! budget 20000
//! cap 2000
//! ```
//! Predicate data lines attach to the most recent `interp`. Without a `@`
//! suffix they apply to every world.

use crate::modal::Frame;
use crate::semantics::{Elem, Interp, PredMap, Structure};
use crate::syntax::{build_universe, parse_formula, sym, Formula, SentenceEnv, Sym, Universe, UniverseError, DEFAULT_CAP};
use crate::truth::Cond;
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ModelError {
    #[error("line {line}: {msg}")]
    Line { line: usize, msg: String },
    #[error("{0}")]
    Io(String),
}

#[derive(Clone, Debug)]
pub struct Model {
    pub env: SentenceEnv,
    pub structure: Structure,
    pub seeds: Vec<Formula>,
    pub depth: usize,
    pub cond: Option<Cond>,
    pub budget: Option<usize>,
    pub cap: usize,
    /// hex sha256 of the source text
    pub digest: String,
}

fn err<T>(line: usize, msg: impl Into<String>) -> Result<T, ModelError> {
    Err(ModelError::Line { line, msg: msg.into() })
}

/// `P/2` -> ("P", 2)
fn sig(line: usize, s: &str) -> Result<(String, usize), ModelError> {
    let Some((n, a)) = s.split_once('/') else { return err(line, format!("expected name/arity, got `{}`", s)) };
    match a.parse() {
        Ok(k) => Ok((n.to_string(), k)),
        Err(_) => err(line, format!("bad arity in `{}`", s)),
    }
}

/// `P(a, b)` -> ("P", ["a", "b"]); `P` alone has no arguments.
fn app(line: usize, s: &str) -> Result<(String, Vec<String>), ModelError> {
    let s = s.trim();
    match s.split_once('(') {
        None => Ok((s.to_string(), vec![])),
        Some((n, rest)) => {
            let Some(inner) = rest.trim_end().strip_suffix(')') else { return err(line, format!("unclosed `(` in `{}`", s)) };
            let args = inner.split(',').map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect();
            Ok((n.trim().to_string(), args))
        }
    }
}

struct Pending {
    interp: String,
    world: Option<String>,
    positive: bool,
    pred: String,
    args: Vec<String>,
    line: usize,
}

impl Model {
    pub fn load(path: &Path) -> Result<Model, ModelError> {
        let text = std::fs::read_to_string(path).map_err(|e| ModelError::Io(format!("{}: {}", path.display(), e)))?;
        Model::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Model, ModelError> {
        let mut env = SentenceEnv::new();
        let mut constants: Vec<String> = Vec::new();
        let mut maps: Vec<(usize, String, Vec<String>, String)> = Vec::new();
        let mut bodies: Vec<(usize, String, String)> = Vec::new();
        let mut interps: Vec<String> = Vec::new();
        let mut data: Vec<Pending> = Vec::new();
        let mut hpairs: Vec<(usize, String, String)> = Vec::new();
        let mut worlds: Vec<String> = Vec::new();
        let mut rpairs: Vec<(usize, String, String)> = Vec::new();
        let mut ranks: Vec<(usize, String, Vec<(String, String)>)> = Vec::new();
        let mut seeds_txt: Vec<(usize, String)> = Vec::new();
        let mut depth = 1;
        let mut cond = None;
        let mut budget = None;
        let mut cap = DEFAULT_CAP;

        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let l = raw.split('#').next().unwrap_or("").trim();
            if l.is_empty() {
                continue;
            }
            if let Some(rest) = l.strip_prefix('+').or_else(|| l.strip_prefix('-')) {
                let Some(cur) = interps.last() else { return err(line, "predicate data before any `interp`") };
                let (atom, world) = match rest.split_once('@') {
                    Some((a, w)) => (a, Some(w.trim().to_string())),
                    None => (rest, None),
                };
                let (pred, args) = app(line, atom)?;
                data.push(Pending { interp: cur.clone(), world, positive: l.starts_with('+'), pred, args, line });
                continue;
            }
            let (kw, rest) = l.split_once(char::is_whitespace).unwrap_or((l, ""));
            let rest = rest.trim();
            let words: Vec<&str> = rest.split_whitespace().collect();
            let add = |r: Result<(), crate::syntax::EnvError>| r.or_else(|e| err(line, e.to_string()));
            match kw {
                "predicate" => {
                    for w in &words {
                        let (n, a) = sig(line, w)?;
                        add(env.add_predicate(&n, a))?;
                    }
                }
                "function" => {
                    for w in &words {
                        let (n, a) = sig(line, w)?;
                        add(env.add_function(&n, a))?;
                    }
                }
                "constant" => {
                    for w in &words {
                        add(env.add_constant(w))?;
                        constants.push(w.to_string());
                    }
                }
                "map" => {
                    let Some((lhs, rhs)) = rest.split_once('=') else { return err(line, "expected `map f(a) = b`") };
                    let (f, args) = app(line, lhs)?;
                    maps.push((line, f, args, rhs.trim().to_string()));
                }
                "sentence" => {
                    let Some((name, body)) = rest.split_once(":=") else { return err(line, "expected `sentence name := formula`") };
                    let name = name.trim();
                    add(env.declare_sentence(name))?;
                    bodies.push((line, name.to_string(), body.trim().to_string()));
                }
                "interp" => {
                    if words.len() != 1 {
                        return err(line, "expected `interp NAME`");
                    }
                    if interps.iter().any(|x| x == words[0]) {
                        return err(line, format!("interpretation {} declared twice", words[0]));
                    }
                    interps.push(words[0].to_string());
                }
                "h" => {
                    if words.len() != 2 {
                        return err(line, "expected `h FROM TO`");
                    }
                    hpairs.push((line, words[0].to_string(), words[1].to_string()));
                }
                "world" => worlds.extend(words.iter().map(|w| w.to_string())),
                "r" => {
                    if words.len() != 2 {
                        return err(line, "expected `r FROM TO`");
                    }
                    rpairs.push((line, words[0].to_string(), words[1].to_string()));
                }
                "rank" => {
                    let Some((w, entries)) = words.split_first() else { return err(line, "expected `rank WORLD v=n ...`") };
                    let mut es = Vec::new();
                    for e in entries {
                        let Some((v, n)) = e.split_once('=') else { return err(line, format!("bad rank entry `{}`", e)) };
                        es.push((v.to_string(), n.to_string()));
                    }
                    ranks.push((line, w.to_string(), es));
                }
                "seed" => seeds_txt.push((line, rest.to_string())),
                "depth" => depth = rest.parse().or_else(|_| err(line, "depth must be a natural number"))?,
                "cond" => cond = Some(Cond::parse(rest).ok_or(()).or_else(|_| err(line, format!("unknown condition `{}`", rest)))?),
                "budget" => budget = Some(rest.parse().or_else(|_| err(line, "budget must be a natural number"))?),
                "cap" => cap = rest.parse().or_else(|_| err(line, "cap must be a natural number"))?,
                _ => return err(line, format!("unknown keyword `{}`", kw)),
            }
        }

        env.modal = !worlds.is_empty();
        for (line, name, body) in &bodies {
            let f = parse_formula(body, &env).or_else(|e| err(*line, e.to_string()))?;
            env.set_definition(name, f).or_else(|e| err(*line, e.to_string()))?;
        }
        env.finish().or_else(|e| err(0, e.to_string()))?;

        let elem = |line: usize, c: &str| -> Result<Elem, ModelError> {
            match constants.iter().position(|x| x == c) {
                Some(i) => Ok(i),
                None => err(line, format!("unknown constant `{}`", c)),
            }
        };
        let const_map: BTreeMap<Sym, Elem> = constants.iter().enumerate().map(|(i, c)| (sym(c), i)).collect();
        let mut functions: BTreeMap<Sym, BTreeMap<Vec<Elem>, Elem>> = BTreeMap::new();
        for (f, _) in &env.functions {
            functions.insert(f.clone(), BTreeMap::new());
        }
        for (line, f, args, val) in &maps {
            let Some(&ar) = env.functions.get(f.as_str()) else { return err(*line, format!("unknown function `{}`", f)) };
            if ar != args.len() {
                return err(*line, format!("`{}` takes {} arguments", f, ar));
            }
            let tuple = args.iter().map(|a| elem(*line, a)).collect::<Result<Vec<_>, _>>()?;
            let v = elem(*line, val)?;
            functions.get_mut(f.as_str()).unwrap().insert(tuple, v);
        }

        let n_w = worlds.len().max(1);
        let mut ints: Vec<Interp> =
            interps.iter().map(|n| Interp { name: n.clone(), worlds: vec![PredMap::default(); n_w] }).collect();
        for d in &data {
            let Some(&ar) = env.predicates.get(d.pred.as_str()) else { return err(d.line, format!("unknown predicate `{}`", d.pred)) };
            if ar != d.args.len() {
                return err(d.line, format!("`{}` takes {} arguments", d.pred, ar));
            }
            let tuple = d.args.iter().map(|a| elem(d.line, a)).collect::<Result<Vec<_>, _>>()?;
            let j = interps.iter().position(|x| *x == d.interp).unwrap();
            let targets: Vec<usize> = match &d.world {
                None => (0..n_w).collect(),
                Some(w) => match worlds.iter().position(|x| x == w) {
                    Some(i) => vec![i],
                    None => return err(d.line, format!("unknown world `{}`", w)),
                },
            };
            let p = sym(&d.pred);
            for w in targets {
                ints[j].worlds[w].add(&p, tuple.clone(), d.positive);
            }
        }
        let iidx = |line: usize, n: &str| -> Result<usize, ModelError> {
            interps.iter().position(|x| x == n).map_or_else(|| err(line, format!("unknown interpretation `{}`", n)), Ok)
        };
        let mut h = BTreeSet::new();
        for (line, a, b) in &hpairs {
            h.insert((iidx(*line, a)?, iidx(*line, b)?));
        }

        let frame = if worlds.is_empty() {
            if !rpairs.is_empty() || !ranks.is_empty() {
                return err(rpairs.first().map_or_else(|| ranks[0].0, |r| r.0), "frame data without `world`");
            }
            None
        } else {
            let widx = |line: usize, n: &str| -> Result<usize, ModelError> {
                worlds.iter().position(|x| x == n).map_or_else(|| err(line, format!("unknown world `{}`", n)), Ok)
            };
            let mut r = Vec::new();
            for (line, a, b) in &rpairs {
                r.push((widx(*line, a)?, widx(*line, b)?));
            }
            let mut rk = vec![BTreeMap::new(); worlds.len()];
            for (line, w, es) in &ranks {
                let wi = widx(*line, w)?;
                for (v, n) in es {
                    let n: u64 = n.parse().or_else(|_| err(*line, format!("bad rank `{}`", n)))?;
                    rk[wi].insert(widx(*line, v)?, n);
                }
            }
            Some(Frame::new(worlds.clone(), &r, rk))
        };

        let structure = Structure::new(constants.clone(), const_map, functions, ints, h, frame);
        let mut seeds = Vec::new();
        for (line, s) in &seeds_txt {
            let f = parse_formula(s, &env).or_else(|e| err(*line, e.to_string()))?;
            seeds.push(env.canonical(&f));
        }
        let digest = Sha256::digest(text.as_bytes()).iter().map(|b| format!("{:02x}", b)).collect();
        Ok(Model { env, structure, seeds, depth, cond, budget, cap, digest })
    }

    /// Universe at the model's depth unless `depth` overrides it.
    pub fn universe(&self, depth: Option<usize>) -> Result<Universe, UniverseError> {
        build_universe(&self.env, &self.seeds, depth.unwrap_or(self.depth), self.cap)
    }
}
