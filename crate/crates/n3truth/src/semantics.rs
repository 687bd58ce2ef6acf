//! Partial interpretations, supervaluation structures and the bilateral
//! evaluation clauses (truth and falsity are computed separately; a sentence
//! is undefined when neither is made true).

use crate::modal::Frame;
use crate::syntax::{Formula, Kind, SentenceEnv, Sym, Term, Universe};
use std::cell::RefCell;
use rustc_hash::FxHashMap;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

pub type Elem = usize;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Ext {
    pub pos: BTreeSet<Vec<Elem>>,
    pub neg: BTreeSet<Vec<Elem>>,
}

/// Extension/anti-extension data for one interpretation at one world.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PredMap {
    pub preds: BTreeMap<Sym, Ext>,
}

impl PredMap {
    pub fn ext(&self, p: &str) -> Option<&Ext> {
        self.preds.get(p)
    }
    pub fn add(&mut self, p: &Sym, tuple: Vec<Elem>, positive: bool) {
        let e = self.preds.entry(p.clone()).or_default();
        if positive {
            e.pos.insert(tuple);
        } else {
            e.neg.insert(tuple);
        }
    }
}

/// A partial interpretation; `worlds[w]` holds its predicate data at world `w`
/// (exactly one entry when no frame is loaded).
#[derive(Clone, Debug, PartialEq)]
pub struct Interp {
    pub name: String,
    pub worlds: Vec<PredMap>,
}

/// Domain, constants and functions (shared by all interpretations), the
/// interpretation list and the admissibility relation H.
#[derive(Clone, Debug)]
pub struct Structure {
    pub domain: Vec<String>,
    pub constants: BTreeMap<Sym, Elem>,
    pub functions: BTreeMap<Sym, BTreeMap<Vec<Elem>, Elem>>,
    pub interps: Vec<Interp>,
    pub h: BTreeSet<(usize, usize)>,
    pub frame: Option<Frame>,
    h_succ: Vec<Vec<usize>>,
}

impl Structure {
    pub fn new(
        domain: Vec<String>,
        constants: BTreeMap<Sym, Elem>,
        functions: BTreeMap<Sym, BTreeMap<Vec<Elem>, Elem>>,
        interps: Vec<Interp>,
        h: BTreeSet<(usize, usize)>,
        frame: Option<Frame>,
    ) -> Structure {
        let mut s = Structure { domain, constants, functions, interps, h, frame, h_succ: Vec::new() };
        s.reindex();
        s
    }

    /// Recomputes successor lists; call after editing `h` directly.
    pub fn reindex(&mut self) {
        self.h_succ = vec![Vec::new(); self.interps.len()];
        for &(a, b) in &self.h {
            if a < self.interps.len() {
                self.h_succ[a].push(b);
            }
        }
    }

    pub fn n_interps(&self) -> usize {
        self.interps.len()
    }
    pub fn n_worlds(&self) -> usize {
        self.frame.as_ref().map_or(1, |f| f.worlds.len())
    }
    pub fn successors(&self, j: usize) -> &[usize] {
        &self.h_succ[j]
    }

    /// Names the first declared constant denoting each element.
    pub fn element_name(&self, e: Elem) -> Option<&Sym> {
        self.constants.iter().find(|(_, &v)| v == e).map(|(k, _)| k)
    }
}

/// Information order: every extension and anti-extension of `i` (at every
/// world) is included in the corresponding one of `j`.
pub fn leq(i: &Interp, j: &Interp) -> Result<bool, SemanticsError> {
    if i.worlds.len() != j.worlds.len() {
        return Err(SemanticsError::SignatureMismatch);
    }
    let empty = Ext::default();
    Ok(i.worlds.iter().zip(&j.worlds).all(|(a, b)| {
        a.preds.iter().all(|(p, ea)| {
            let eb = b.preds.get(p).unwrap_or(&empty);
            ea.pos.is_subset(&eb.pos) && ea.neg.is_subset(&eb.neg)
        })
    }))
}

#[derive(Debug, thiserror::Error, PartialEq, Clone)]
pub enum SemanticsError {
    #[error("interpretations differ in shape")]
    SignatureMismatch,
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("unknown symbol `{0}`")]
    Unknown(String),
    #[error("modal connective in `{0}` but no frame is loaded")]
    NoFrame(String),
    #[error("element {0} has no constant naming it")]
    Unnamed(usize),
    #[error("function `{0}` undefined on {1:?}")]
    Partial(String, Vec<Elem>),
    #[error("index out of range: {0}")]
    Range(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TruthValue {
    True,
    False,
    Undefined,
}

impl fmt::Display for TruthValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TruthValue::True => "true",
            TruthValue::False => "false",
            TruthValue::Undefined => "undefined",
        })
    }
}

/// What a closed term denotes.
#[derive(Clone, Debug, PartialEq)]
pub enum Den {
    Elem(Elem),
    Sentence(Formula),
}

pub type Assignment = BTreeMap<Sym, Elem>;

/// Denotation of a term at interpretation `_j` (constants and functions are
/// shared, so `_j` never changes the result).
pub fn denote(
    s: &Structure,
    env: &SentenceEnv,
    _j: usize,
    beta: &Assignment,
    t: &Term,
) -> Result<Den, SemanticsError> {
    match t {
        Term::Var(v) => beta.get(v).map(|&e| Den::Elem(e)).ok_or_else(|| SemanticsError::Unbound(v.to_string())),
        Term::Const(c) => s.constants.get(c).map(|&e| Den::Elem(e)).ok_or_else(|| SemanticsError::Unknown(c.to_string())),
        Term::Quote(q) => env.quoted(q).cloned().map(Den::Sentence).ok_or_else(|| SemanticsError::Unknown(format!("{:?}", q))),
        Term::App(fname, args) => {
            let mut vals = Vec::with_capacity(args.len());
            for a in args {
                match denote(s, env, _j, beta, a)? {
                    Den::Elem(e) => vals.push(e),
                    Den::Sentence(_) => return Err(SemanticsError::Unknown(format!("quotation inside {}", fname))),
                }
            }
            let table = s.functions.get(fname).ok_or_else(|| SemanticsError::Unknown(fname.to_string()))?;
            table.get(&vals).map(|&e| Den::Elem(e)).ok_or_else(|| SemanticsError::Partial(fname.to_string(), vals))
        }
    }
}

/// Access to a family of valuation functions, used to interpret `T`.
/// Member `m` is a map (world, interpretation) -> sentence set.
pub trait TruthContext {
    /// Whether `sentence` belongs to member `m` at (world `w`, interpretation `j`).
    fn contains(&self, m: usize, w: usize, j: usize, sentence: &Formula) -> bool;
    /// Members admissible from member `m` (the second half of the product
    /// relation on truth interpretations).
    fn successors(&self, m: usize) -> &[usize];
}

/// An evaluation point: world, interpretation, and optionally a family member
/// supplying the truth predicate. Without a member, `T` is empty both ways.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Point {
    pub w: usize,
    pub j: usize,
    pub m: Option<usize>,
}

impl Point {
    pub fn plain(j: usize) -> Point {
        Point { w: 0, j, m: None }
    }
}

/// Memoizing evaluator over one structure snapshot. Formulas must be closed
/// and checked with [`Evaluator::check`] (the public entry points do this).
pub struct Evaluator<'a> {
    s: &'a Structure,
    env: &'a SentenceEnv,
    truth: Option<&'a dyn TruthContext>,
    memo: RefCell<FxHashMap<(Point, Formula), bool>>,
    consts: Vec<Term>,
}

impl<'a> Evaluator<'a> {
    pub fn new(s: &'a Structure, env: &'a SentenceEnv) -> Self {
        Self::with_truth(s, env, None)
    }

    pub fn with_truth(s: &'a Structure, env: &'a SentenceEnv, truth: Option<&'a dyn TruthContext>) -> Self {
        let consts = s.constants.keys().map(|c| Term::Const(c.clone())).collect();
        Evaluator { s, env, truth, memo: RefCell::new(FxHashMap::default()), consts }
    }

    pub fn structure(&self) -> &Structure {
        self.s
    }

    /// Rejects open formulas, unknown symbols and modal connectives without a frame.
    pub fn check(&self, f: &Formula) -> Result<(), SemanticsError> {
        if let Some(v) = f.free_vars().first() {
            return Err(SemanticsError::Unbound(v.to_string()));
        }
        if f.has_modal() && self.s.frame.is_none() {
            return Err(SemanticsError::NoFrame(f.to_string()));
        }
        self.check_symbols(f)
    }

    fn check_symbols(&self, f: &Formula) -> Result<(), SemanticsError> {
        let ct = |t: &Term| -> Result<(), SemanticsError> {
            let mut sub = Vec::new();
            t.subterms(&mut sub);
            for x in sub {
                match x {
                    Term::Const(c) if !self.s.constants.contains_key(&c) => return Err(SemanticsError::Unknown(c.to_string())),
                    Term::App(g, _) if !self.s.functions.contains_key(&g) => return Err(SemanticsError::Unknown(g.to_string())),
                    Term::Quote(q) if self.env.quoted(&q).is_none() => return Err(SemanticsError::Unknown(format!("{:?}", q))),
                    _ => {}
                }
            }
            Ok(())
        };
        match f.kind() {
            Kind::Eq(a, b) => {
                ct(a)?;
                ct(b)
            }
            Kind::Atom(_, args) => args.iter().try_for_each(ct),
            Kind::Truth(t) => ct(t),
            Kind::Falsum => Ok(()),
            Kind::Not(a) | Kind::Box(a) | Kind::Forall(_, a) => self.check_symbols(a),
            Kind::And(a, b) | Kind::Imp(a, b) | Kind::Would(a, b) => {
                self.check_symbols(a)?;
                self.check_symbols(b)
            }
        }
    }

    /// Truth value at a point (checked entry point).
    pub fn value(&self, p: Point, f: &Formula) -> Result<TruthValue, SemanticsError> {
        self.check(f)?;
        Ok(self.value_unchecked(p, f))
    }

    pub fn value_unchecked(&self, p: Point, f: &Formula) -> TruthValue {
        if self.holds(p, f) {
            TruthValue::True
        } else if self.holds(p, &Formula::not(f.clone())) {
            TruthValue::False
        } else {
            TruthValue::Undefined
        }
    }

    fn den(&self, t: &Term) -> Option<Den> {
        denote(self.s, self.env, 0, &Assignment::new(), t).ok()
    }

    fn atom_data(&self, p: Point, pred: &str) -> Option<&Ext> {
        self.s.interps[p.j].worlds[p.w].ext(pred)
    }

    fn tuple(&self, args: &[Term]) -> Option<Vec<Elem>> {
        args.iter()
            .map(|a| match self.den(a) {
                Some(Den::Elem(e)) => Some(e),
                _ => None,
            })
            .collect()
    }

    /// The truth clauses. `holds(p, ~phi)` implements the falsity clauses.
    pub fn holds(&self, p: Point, f: &Formula) -> bool {
        let atomic = matches!(f.kind(), Kind::Eq(..) | Kind::Atom(..) | Kind::Falsum);
        if !atomic {
            if let Some(&v) = self.memo.borrow().get(&(p, f.clone())) {
                return v;
            }
        }
        let v = self.compute(p, f);
        if !atomic {
            self.memo.borrow_mut().insert((p, f.clone()), v);
        }
        v
    }

    fn succ_points(&self, p: Point) -> Vec<Point> {
        let mut out = Vec::new();
        for &j2 in self.s.successors(p.j) {
            match (p.m, self.truth) {
                (Some(m), Some(t)) => {
                    for &m2 in t.successors(m) {
                        out.push(Point { w: p.w, j: j2, m: Some(m2) })
                    }
                }
                _ => out.push(Point { w: p.w, j: j2, m: p.m }),
            }
        }
        out
    }

    fn truth_member(&self, p: Point, t: &Term, negated: bool) -> bool {
        let (Some(m), Some(ctx)) = (p.m, self.truth) else { return false };
        match self.den(t) {
            Some(Den::Sentence(psi)) => {
                let target = if negated { Formula::not(psi) } else { psi };
                ctx.contains(m, p.w, p.j, &target)
            }
            _ => false,
        }
    }

    fn compute(&self, p: Point, f: &Formula) -> bool {
        match f.kind() {
            Kind::Eq(a, b) => self.den(a) == self.den(b),
            Kind::Atom(pred, args) => match (self.atom_data(p, pred), self.tuple(args)) {
                (Some(e), Some(t)) => e.pos.contains(&t),
                _ => false,
            },
            Kind::Truth(t) => self.truth_member(p, t, false),
            Kind::Falsum => false,
            Kind::And(a, b) => self.holds(p, a) && self.holds(p, b),
            Kind::Imp(a, b) => self.succ_points(p).into_iter().all(|q| !self.holds(q, a) || self.holds(q, b)),
            Kind::Forall(v, a) => self.consts.iter().all(|c| self.holds(p, &a.subst(v, c))),
            Kind::Box(a) => self.frame_succ(p.w).iter().all(|&v| self.holds(Point { w: v, ..p }, a)),
            Kind::Would(a, b) => self.would(p, a, b),
            Kind::Not(g) => self.compute_neg(p, g),
        }
    }

    fn compute_neg(&self, p: Point, g: &Formula) -> bool {
        match g.kind() {
            Kind::Eq(a, b) => self.den(a) != self.den(b),
            Kind::Atom(pred, args) => match (self.atom_data(p, pred), self.tuple(args)) {
                (Some(e), Some(t)) => e.neg.contains(&t),
                _ => false,
            },
            Kind::Truth(t) => self.truth_member(p, t, true),
            Kind::Falsum => true,
            Kind::Not(a) => self.holds(p, a),
            Kind::And(a, b) => self.holds(p, &Formula::not(a.clone())) || self.holds(p, &Formula::not(b.clone())),
            Kind::Imp(a, b) => self.holds(p, a) && self.holds(p, &Formula::not(b.clone())),
            Kind::Forall(v, a) => self.consts.iter().any(|c| self.holds(p, &Formula::not(a.subst(v, c)))),
            Kind::Box(a) => {
                let na = Formula::not(a.clone());
                self.frame_succ(p.w).iter().any(|&v| self.holds(Point { w: v, ..p }, &na))
            }
            Kind::Would(a, b) => self.would_false(p, a, b),
        }
    }

    fn frame_succ(&self, w: usize) -> &[usize] {
        self.s.frame.as_ref().map_or(&[], |fr| fr.successors(w))
    }

    /// `a ~> b`: either `~a` holds at every accessible world, or some accessible `a`-world
    /// has `a -> b` holding at every world ranked at most as far.
    fn would(&self, p: Point, a: &Formula, b: &Formula) -> bool {
        let Some(fr) = self.s.frame.as_ref() else { return false };
        let succ = fr.successors(p.w);
        let na = Formula::not(a.clone());
        if succ.iter().all(|&v| self.holds(Point { w: v, ..p }, &na)) {
            return true;
        }
        let a_worlds: Vec<usize> = succ.iter().copied().filter(|&v| self.holds(Point { w: v, ..p }, a)).collect();
        let ab = Formula::imp(a.clone(), b.clone());
        let carrier = fr.carrier(p.w);
        a_worlds.iter().any(|&v| {
            let rv = fr.rank(p.w, v);
            carrier.iter().all(|&u| fr.rank(p.w, u) > rv || self.holds(Point { w: u, ..p }, &ab))
        })
    }

    /// `~(a ~> b)`: some accessible `a`-world exists, and every accessible
    /// `a`-world is strictly beaten by a world where `a` and `~b` hold.
    fn would_false(&self, p: Point, a: &Formula, b: &Formula) -> bool {
        let Some(fr) = self.s.frame.as_ref() else { return false };
        let succ = fr.successors(p.w);
        let a_worlds: Vec<usize> = succ.iter().copied().filter(|&v| self.holds(Point { w: v, ..p }, a)).collect();
        if a_worlds.is_empty() {
            return false;
        }
        let nb = Formula::not(b.clone());
        let carrier = fr.carrier(p.w);
        a_worlds.iter().all(|&v| {
            let rv = fr.rank(p.w, v);
            carrier.iter().any(|&u| {
                fr.rank(p.w, u) < rv && self.holds(Point { w: u, ..p }, a) && self.holds(Point { w: u, ..p }, &nb)
            })
        })
    }
}

/// Evaluates `f` under `beta` at interpretation `j` (world 0, no truth predicate).
pub fn eval(
    s: &Structure,
    env: &SentenceEnv,
    j: usize,
    beta: &Assignment,
    f: &Formula,
) -> Result<TruthValue, SemanticsError> {
    let closed = close_under(s, f, beta)?;
    Evaluator::new(s, env).value(Point::plain(j), &closed)
}

/// Replaces free variables by constants naming their assigned elements.
pub fn close_under(s: &Structure, f: &Formula, beta: &Assignment) -> Result<Formula, SemanticsError> {
    let mut g = f.clone();
    for v in f.free_vars() {
        let e = *beta.get(&v).ok_or_else(|| SemanticsError::Unbound(v.to_string()))?;
        let c = s.element_name(e).ok_or(SemanticsError::Unnamed(e))?;
        g = g.subst(&v, &Term::Const(c.clone()));
    }
    Ok(g)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation(pub String);

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Checks the structure conditions; returns every violation found.
pub fn validate_structure(s: &Structure, env: &SentenceEnv) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut v = |m: String| out.push(Violation(m));
    let n = s.interps.len();
    if s.domain.is_empty() {
        v("domain is empty".into());
    }
    if n == 0 {
        v("no interpretations".into());
    }
    for (c, &e) in &s.constants {
        if e >= s.domain.len() {
            v(format!("constant {} denotes an element outside the domain", c));
        }
    }
    for e in 0..s.domain.len() {
        if s.element_name(e).is_none() {
            v(format!("element {} has no name", s.domain[e]));
        }
    }
    for (g, &ar) in &env.functions {
        match s.functions.get(g) {
            None => v(format!("function {} has no table", g)),
            Some(tab) => {
                let mut missing = 0usize;
                for_each_tuple(s.domain.len(), ar, &mut |t| {
                    if !tab.contains_key(t) {
                        missing += 1
                    }
                });
                if missing > 0 {
                    v(format!("function {} is undefined on {} tuple(s)", g, missing));
                }
                if tab.iter().any(|(k, &r)| k.len() != ar || r >= s.domain.len() || k.iter().any(|&e| e >= s.domain.len())) {
                    v(format!("function {} has malformed entries", g));
                }
            }
        }
    }
    let nw = s.n_worlds();
    for (ji, i) in s.interps.iter().enumerate() {
        if i.worlds.len() != nw {
            v(format!("interpretation {} covers {} world(s), expected {}", i.name, i.worlds.len(), nw));
            continue;
        }
        for (w, pm) in i.worlds.iter().enumerate() {
            for (p, e) in &pm.preds {
                let Some(&ar) = env.predicates.get(p) else {
                    v(format!("interpretation {} mentions undeclared predicate {}", i.name, p));
                    continue;
                };
                for t in e.pos.iter().chain(&e.neg) {
                    if t.len() != ar || t.iter().any(|&x| x >= s.domain.len()) {
                        v(format!("interpretation {}: bad tuple {:?} for {}", i.name, t, p));
                    }
                }
                if let Some(t) = e.pos.intersection(&e.neg).next() {
                    let at = if nw > 1 { format!(" at world {}", w) } else { String::new() };
                    v(format!(
                        "interpretation {}{}: extension and anti-extension of {} overlap on {:?}",
                        s.interps[ji].name, at, p, t
                    ));
                }
            }
        }
    }
    for &(a, b) in &s.h {
        if a >= n || b >= n {
            v(format!("H pair ({}, {}) out of range", a, b));
        }
    }
    for j in 0..n {
        if !s.h.contains(&(j, j)) {
            v(format!("H not reflexive at {}", s.interps[j].name));
        }
    }
    for &(a, b) in &s.h {
        for &(b2, c) in &s.h {
            if b == b2 && !s.h.contains(&(a, c)) && a < n && c < n {
                v(format!("H not transitive: missing ({}, {})", s.interps[a].name, s.interps[c].name));
            }
        }
    }
    for &(a, b) in &s.h {
        if a < n && b < n && leq(&s.interps[a], &s.interps[b]) != Ok(true) {
            v(format!("H exceeds information order: ({}, {})", s.interps[a].name, s.interps[b].name));
        }
    }
    if let Some(fr) = &s.frame {
        for x in crate::modal::validate_frame(fr) {
            v(x.0);
        }
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out.dedup();
    out
}

pub(crate) fn for_each_tuple(n: usize, arity: usize, f: &mut dyn FnMut(&[Elem])) {
    let mut t = vec![0; arity];
    if n == 0 && arity > 0 {
        return;
    }
    loop {
        f(&t);
        let mut i = arity;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            t[i] += 1;
            if t[i] < n {
                break;
            }
            t[i] = 0;
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PersistenceFailure {
    pub from: usize,
    pub to: usize,
    pub world: usize,
    pub sentence: Formula,
}

/// For every H pair and universe sentence (at every world), truth at the
/// source must carry over to the target. Returns the counterexamples.
pub fn persistence_check(s: &Structure, env: &SentenceEnv, u: &Universe) -> Vec<PersistenceFailure> {
    let ev = Evaluator::new(s, env);
    let mut out = Vec::new();
    for &(a, b) in &s.h {
        if a >= s.n_interps() || b >= s.n_interps() {
            continue;
        }
        for w in 0..s.n_worlds() {
            for f in u.iter() {
                if ev.check(f).is_err() {
                    continue;
                }
                if ev.holds(Point { w, j: a, m: None }, f) && !ev.holds(Point { w, j: b, m: None }, f) {
                    out.push(PersistenceFailure { from: a, to: b, world: w, sentence: f.clone() });
                }
            }
        }
    }
    out
}
