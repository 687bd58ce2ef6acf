//! The finite sentence universe every fixed point lives in.
//!
//! Closure rules, applied until nothing changes:
//! * seeds and named definitions are members;
//! * immediate subsentences are members, with `A x phi` contributing
//!   `phi(c)` for every declared constant `c`;
//! * the sentence inside a quoted truth atom `T('phi')` is a member, and so
//!   is its negation;
//! * `T('phi')` is a member for every member `phi` whose negation is also a
//!   member and whose quotation nests at most `depth` inline quotes (named
//!   quotes cost nothing). Requiring `~phi` keeps `~T('phi')` decidable by
//!   membership of `~phi`;
//! * negation chains: every formula `~^n core` that entered by one of the
//!   rules above makes `~^k core` a member for all `k <= max(n, 3)`.
//!
//! The chain rule gives every non-top member its negation while keeping the
//! set finite. Applying the builder to its own output is a no-op.

use super::{Formula, Kind, SentenceEnv, Term};
use std::collections::HashMap;

pub const DEFAULT_CAP: usize = 2000;
const CHAIN: usize = 3;

#[derive(Clone, Debug)]
pub struct Universe {
    sentences: Vec<Formula>,
    index: HashMap<Formula, usize>,
    pub depth: usize,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum UniverseError {
    #[error("universe exceeds the cap of {cap} sentences")]
    TooLarge { cap: usize },
    #[error("seed `{0}` is not a closed sentence")]
    OpenSeed(String),
    #[error("closure depth must be at least 1")]
    ZeroDepth,
}

impl Universe {
    /// Wraps an explicit list (deduplicated, order kept). No closure is applied.
    pub fn from_list(items: impl IntoIterator<Item = Formula>) -> Universe {
        let mut u = Universe { sentences: Vec::new(), index: HashMap::new(), depth: 0 };
        for f in items {
            u.insert(f);
        }
        u
    }

    fn insert(&mut self, f: Formula) -> bool {
        if self.index.contains_key(&f) {
            return false;
        }
        self.index.insert(f.clone(), self.sentences.len());
        self.sentences.push(f);
        true
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }
    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }
    pub fn get(&self, i: usize) -> &Formula {
        &self.sentences[i]
    }
    pub fn index_of(&self, f: &Formula) -> Option<usize> {
        self.index.get(f).copied()
    }
    pub fn contains(&self, f: &Formula) -> bool {
        self.index.contains_key(f)
    }
    pub fn iter(&self) -> std::slice::Iter<'_, Formula> {
        self.sentences.iter()
    }
    pub fn as_slice(&self) -> &[Formula] {
        &self.sentences
    }
}

struct Builder<'a> {
    env: &'a SentenceEnv,
    depth: usize,
    cap: usize,
    u: Universe,
    chain: HashMap<Formula, usize>,
}

impl Builder<'_> {
    fn push(&mut self, f: Formula) -> Result<(), UniverseError> {
        if self.u.insert(f) && self.u.len() > self.cap {
            return Err(UniverseError::TooLarge { cap: self.cap });
        }
        Ok(())
    }

    /// Adds a formula that entered by a non-negation rule.
    fn add(&mut self, f: Formula) -> Result<(), UniverseError> {
        let (n, core) = f.peel();
        let core = core.clone();
        let want = n.max(CHAIN);
        let have = self.chain.get(&core).copied();
        if have.is_some_and(|h| h >= want) {
            return Ok(());
        }
        self.chain.insert(core.clone(), want);
        let mut cur = core;
        for _ in 0..=want {
            self.push(cur.clone())?;
            cur = Formula::not(cur);
        }
        Ok(())
    }

    fn expand(&mut self, i: usize) -> Result<(), UniverseError> {
        let f = self.u.get(i).clone();
        let (_, core) = f.peel();
        match core.kind() {
            Kind::And(a, b) | Kind::Imp(a, b) | Kind::Would(a, b) => {
                self.add(a.clone())?;
                self.add(b.clone())?;
            }
            Kind::Box(a) => self.add(a.clone())?,
            Kind::Truth(Term::Quote(q)) => {
                if let Some(g) = self.env.quoted(q) {
                    self.add(Formula::not(self.env.canonical(g)))?;
                }
            }
            Kind::Forall(v, a) => {
                for c in self.env.constants.clone() {
                    self.add(a.subst(v, &Term::Const(c)))?;
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// The truth-atom rule; true when something was added.
    fn wrap(&mut self) -> Result<bool, UniverseError> {
        let mut grew = false;
        let mut i = 0;
        while i < self.u.len() {
            let f = self.u.get(i).clone();
            i += 1;
            if !self.u.contains(&Formula::not(f.clone())) {
                continue;
            }
            let t = Formula::truth(self.env.quote(&f));
            if t.quote_depth() <= self.depth && !self.u.contains(&t) {
                self.add(t)?;
                grew = true;
            }
        }
        Ok(grew)
    }
}

/// Builds the smallest universe containing `seeds` and every named sentence
/// that satisfies the closure rules above.
pub fn build_universe(
    env: &SentenceEnv,
    seeds: &[Formula],
    depth: usize,
    cap: usize,
) -> Result<Universe, UniverseError> {
    if depth == 0 {
        return Err(UniverseError::ZeroDepth);
    }
    for s in seeds {
        if !s.is_closed() {
            return Err(UniverseError::OpenSeed(s.to_string()));
        }
    }
    let mut b = Builder {
        env,
        depth,
        cap,
        u: Universe { sentences: Vec::new(), index: HashMap::new(), depth },
        chain: HashMap::new(),
    };
    for s in seeds {
        b.add(env.canonical(s))?;
    }
    for (_, d) in env.named() {
        b.add(d.clone())?;
    }
    let mut next = 0;
    loop {
        while next < b.u.len() {
            b.expand(next)?;
            next += 1;
        }
        if !b.wrap()? {
            break;
        }
    }
    Ok(b.u)
}
