//! Ordering frames and the world-relative clauses for `[]` and `~>`.
//!
//! The evaluator in `semantics` already carries a world index; this module
//! owns the frame data, its validation and the modal entry points. Modal
//! fixed points reuse the truth engine with worlds switched on.

use crate::semantics::{
    close_under, Assignment, Evaluator, Point, SemanticsError, Structure, TruthValue, Violation,
};
use crate::syntax::{Formula, SentenceEnv, Universe};
use crate::truth::{self, Cond, FixedPointResult, RunOptions, TruthError};
use std::collections::BTreeMap;

/// Worlds, accessibility and one ranking per world (lower = closer; ties allowed).
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    pub worlds: Vec<String>,
    succ: Vec<Vec<usize>>,
    /// `ranks[w][v]`; only entries on the carrier of `w` matter
    pub ranks: Vec<BTreeMap<usize, u64>>,
}

impl Frame {
    /// `r` lists accessibility pairs by index. Out-of-range pairs are kept
    /// out of the successor lists and reported by [`validate_frame`].
    pub fn new(worlds: Vec<String>, r: &[(usize, usize)], ranks: Vec<BTreeMap<usize, u64>>) -> Frame {
        let n = worlds.len();
        let mut succ = vec![Vec::new(); n];
        for &(a, b) in r {
            if a < n && b < n && !succ[a].contains(&b) {
                succ[a].push(b);
            }
        }
        for s in &mut succ {
            s.sort_unstable();
        }
        let mut ranks = ranks;
        ranks.resize(n, BTreeMap::new());
        Frame { worlds, succ, ranks }
    }

    pub fn successors(&self, w: usize) -> &[usize] {
        &self.succ[w]
    }

    pub fn relation(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (a, s) in self.succ.iter().enumerate() {
            out.extend(s.iter().map(|&b| (a, b)));
        }
        out
    }

    /// `{v | wRv or v = w}`, sorted.
    pub fn carrier(&self, w: usize) -> Vec<usize> {
        let mut c = self.succ[w].clone();
        if !c.contains(&w) {
            c.push(w);
            c.sort_unstable();
        }
        c
    }

    /// Missing ranks count as infinitely far; validation flags them.
    pub fn rank(&self, w: usize, v: usize) -> u64 {
        self.ranks[w].get(&v).copied().unwrap_or(u64::MAX)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.worlds.iter().position(|w| w == name)
    }

    /// One reflexive-free world with no accessible worlds.
    pub fn single(name: &str) -> Frame {
        Frame::new(vec![name.to_string()], &[], vec![BTreeMap::from([(0, 0)])])
    }
}

/// A ranking is total, reflexive and transitive by construction once every
/// carrier world has a rank, so the only way to fail is a missing rank.
pub fn validate_frame(fr: &Frame) -> Vec<Violation> {
    let mut out = Vec::new();
    if fr.worlds.is_empty() {
        out.push(Violation("frame has no worlds".into()));
    }
    for i in 0..fr.worlds.len() {
        for j in (i + 1)..fr.worlds.len() {
            if fr.worlds[i] == fr.worlds[j] {
                out.push(Violation(format!("world {} declared twice", fr.worlds[i])));
            }
        }
    }
    for w in 0..fr.worlds.len() {
        for v in fr.carrier(w) {
            if !fr.ranks[w].contains_key(&v) {
                out.push(Violation(format!(
                    "order at {} is not total: {} has no rank",
                    fr.worlds[w], fr.worlds[v]
                )));
            }
        }
    }
    out
}

/// Truth value of `f` (free variables closed by `beta`) at world `w` and
/// interpretation `j`, with the truth predicate empty.
pub fn eval_modal(
    s: &Structure,
    env: &SentenceEnv,
    w: usize,
    j: usize,
    beta: &Assignment,
    f: &Formula,
) -> Result<TruthValue, SemanticsError> {
    if s.frame.is_none() && f.has_modal() {
        return Err(SemanticsError::NoFrame(f.to_string()));
    }
    if w >= s.n_worlds() {
        return Err(SemanticsError::Range(format!("world {}", w)));
    }
    if j >= s.n_interps() {
        return Err(SemanticsError::Range(format!("interpretation {}", j)));
    }
    let closed = close_under(s, f, beta)?;
    Evaluator::new(s, env).value(Point { w, j, m: None }, &closed)
}

/// The world-indexed fixed point; requires a frame on the structure.
pub fn modal_fixed_point(
    s: &Structure,
    env: &SentenceEnv,
    universe: &Universe,
    cond: Cond,
    opts: &RunOptions,
) -> Result<FixedPointResult, TruthError> {
    if s.frame.is_none() {
        return Err(TruthError::Input("modal fixed point needs a frame".into()));
    }
    truth::iterate_fixed_point(s, env, universe, cond, opts)
}
