//! Terms, formulas, quotation and named sentences.

mod parse;
mod universe;

pub use parse::{parse_formula, parse_formula_auto, parse_sequent, ParseError};
pub use universe::{build_universe, Universe, UniverseError, DEFAULT_CAP};

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

pub type Sym = Arc<str>;

pub fn sym(s: &str) -> Sym {
    Arc::from(s)
}

/// What a quote term points at. `Name` is used whenever the quoted sentence
/// is a declared definition, so structural equality of quotes coincides with
/// equality of the quoted sentences.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum QuoteRef {
    Name(Sym),
    Inline(Formula),
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Term {
    Var(Sym),
    Const(Sym),
    App(Sym, Vec<Term>),
    Quote(QuoteRef),
}

impl Term {
    pub fn is_closed(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::Const(_) | Term::Quote(_) => true,
            Term::App(_, args) => args.iter().all(Term::is_closed),
        }
    }

    fn collect_vars(&self, out: &mut Vec<Sym>) {
        match self {
            Term::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone())
                }
            }
            Term::App(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
            _ => {}
        }
    }

    fn subst(&self, var: &str, by: &Term) -> Term {
        match self {
            Term::Var(v) if &**v == var => by.clone(),
            Term::App(f, args) => Term::App(f.clone(), args.iter().map(|a| a.subst(var, by)).collect()),
            t => t.clone(),
        }
    }

    fn quote_depth(&self) -> usize {
        match self {
            Term::Quote(QuoteRef::Inline(f)) => 1 + f.quote_depth(),
            Term::App(_, args) => args.iter().map(Term::quote_depth).max().unwrap_or(0),
            _ => 0,
        }
    }

    /// Rewrites every sub-occurrence of `from` (a closed term) into `to`, one
    /// position at a time. Used by the replacement rule for identity.
    pub fn replace_once(&self, from: &Term, to: &Term) -> Vec<Term> {
        let mut out = Vec::new();
        if self == from {
            out.push(to.clone());
        }
        if let Term::App(f, args) = self {
            for (i, a) in args.iter().enumerate() {
                for r in a.replace_once(from, to) {
                    let mut nargs = args.clone();
                    nargs[i] = r;
                    out.push(Term::App(f.clone(), nargs));
                }
            }
        }
        out
    }

    pub fn subterms(&self, out: &mut Vec<Term>) {
        if !out.contains(self) {
            out.push(self.clone());
        }
        if let Term::App(_, args) = self {
            args.iter().for_each(|a| a.subterms(out));
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Kind {
    Eq(Term, Term),
    Atom(Sym, Vec<Term>),
    Truth(Term),
    Falsum,
    Not(Formula),
    And(Formula, Formula),
    Imp(Formula, Formula),
    Forall(Sym, Formula),
    Box(Formula),
    Would(Formula, Formula),
}

#[derive(Debug)]
struct Node {
    kind: Kind,
    hash: u64,
    size: u32,
}

/// Immutable, cheaply clonable formula. Equality is structural.
#[derive(Clone, Debug)]
pub struct Formula(Arc<Node>);

impl PartialEq for Formula {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || (self.0.hash == other.0.hash && self.0.kind == other.0.kind)
    }
}
impl Eq for Formula {}

impl Hash for Formula {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.0.hash)
    }
}

impl Formula {
    fn mk(kind: Kind) -> Formula {
        let mut h = DefaultHasher::new();
        kind.hash(&mut h);
        let size = 1 + match &kind {
            Kind::Not(a) | Kind::Forall(_, a) | Kind::Box(a) => a.size(),
            Kind::And(a, b) | Kind::Imp(a, b) | Kind::Would(a, b) => a.size() + b.size(),
            _ => 0,
        };
        Formula(Arc::new(Node { kind, hash: h.finish(), size }))
    }

    pub fn kind(&self) -> &Kind {
        &self.0.kind
    }
    pub fn size(&self) -> u32 {
        self.0.size
    }

    pub fn eq_terms(s: Term, t: Term) -> Formula {
        Self::mk(Kind::Eq(s, t))
    }
    pub fn atom(p: &str, args: Vec<Term>) -> Formula {
        Self::mk(Kind::Atom(sym(p), args))
    }
    pub fn truth(t: Term) -> Formula {
        Self::mk(Kind::Truth(t))
    }
    pub fn falsum() -> Formula {
        Self::mk(Kind::Falsum)
    }
    pub fn not(a: Formula) -> Formula {
        Self::mk(Kind::Not(a))
    }
    pub fn and(a: Formula, b: Formula) -> Formula {
        Self::mk(Kind::And(a, b))
    }
    pub fn imp(a: Formula, b: Formula) -> Formula {
        Self::mk(Kind::Imp(a, b))
    }
    pub fn forall(v: &str, a: Formula) -> Formula {
        Self::mk(Kind::Forall(sym(v), a))
    }
    pub fn boxed(a: Formula) -> Formula {
        Self::mk(Kind::Box(a))
    }
    pub fn would(a: Formula, b: Formula) -> Formula {
        Self::mk(Kind::Would(a, b))
    }
    pub fn or(a: Formula, b: Formula) -> Formula {
        Self::not(Self::and(Self::not(a), Self::not(b)))
    }
    pub fn exists(v: &str, a: Formula) -> Formula {
        Self::not(Self::forall(v, Self::not(a)))
    }
    pub fn iff(a: Formula, b: Formula) -> Formula {
        Self::and(Self::imp(a.clone(), b.clone()), Self::imp(b, a))
    }
    pub fn strict(a: Formula, b: Formula) -> Formula {
        Self::boxed(Self::imp(a, b))
    }
    pub fn verum() -> Formula {
        Self::not(Self::falsum())
    }

    /// Conjunction of a list; the empty conjunction is `~false`.
    pub fn conj(items: &[Formula]) -> Formula {
        let mut it = items.iter().rev();
        match it.next() {
            None => Self::verum(),
            Some(last) => it.fold(last.clone(), |acc, f| Self::and(f.clone(), acc)),
        }
    }
    /// Disjunction of a list; the empty disjunction is `false`.
    pub fn disj(items: &[Formula]) -> Formula {
        let mut it = items.iter().rev();
        match it.next() {
            None => Self::falsum(),
            Some(last) => it.fold(last.clone(), |acc, f| Self::or(f.clone(), acc)),
        }
    }

    pub fn negand(&self) -> Option<&Formula> {
        match self.kind() {
            Kind::Not(a) => Some(a),
            _ => None,
        }
    }

    /// Splits off leading negations: returns (count, core).
    pub fn peel(&self) -> (usize, &Formula) {
        let mut n = 0;
        let mut cur = self;
        while let Kind::Not(a) = cur.kind() {
            n += 1;
            cur = a;
        }
        (n, cur)
    }

    pub fn free_vars(&self) -> Vec<Sym> {
        let mut out = Vec::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<Sym>, out: &mut Vec<Sym>) {
        let push_term = |t: &Term, bound: &Vec<Sym>, out: &mut Vec<Sym>| {
            let mut vs = Vec::new();
            t.collect_vars(&mut vs);
            for v in vs {
                if !bound.contains(&v) && !out.contains(&v) {
                    out.push(v)
                }
            }
        };
        match self.kind() {
            Kind::Eq(s, t) => {
                push_term(s, bound, out);
                push_term(t, bound, out);
            }
            Kind::Atom(_, args) => args.iter().for_each(|t| push_term(t, bound, out)),
            Kind::Truth(t) => push_term(t, bound, out),
            Kind::Falsum => {}
            Kind::Not(a) | Kind::Box(a) => a.collect_free(bound, out),
            Kind::And(a, b) | Kind::Imp(a, b) | Kind::Would(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Kind::Forall(v, a) => {
                bound.push(v.clone());
                a.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// Capture-free substitution of `by` for the free occurrences of `var`.
    pub fn subst(&self, var: &str, by: &Term) -> Formula {
        let mut by_vars = Vec::new();
        by.collect_vars(&mut by_vars);
        self.subst_inner(var, by, &by_vars)
    }

    fn subst_inner(&self, var: &str, by: &Term, by_vars: &[Sym]) -> Formula {
        match self.kind() {
            Kind::Eq(s, t) => Self::eq_terms(s.subst(var, by), t.subst(var, by)),
            Kind::Atom(p, args) => Self::mk(Kind::Atom(p.clone(), args.iter().map(|a| a.subst(var, by)).collect())),
            Kind::Truth(t) => Self::truth(t.subst(var, by)),
            Kind::Falsum => self.clone(),
            Kind::Not(a) => Self::not(a.subst_inner(var, by, by_vars)),
            Kind::Box(a) => Self::boxed(a.subst_inner(var, by, by_vars)),
            Kind::And(a, b) => Self::and(a.subst_inner(var, by, by_vars), b.subst_inner(var, by, by_vars)),
            Kind::Imp(a, b) => Self::imp(a.subst_inner(var, by, by_vars), b.subst_inner(var, by, by_vars)),
            Kind::Would(a, b) => Self::would(a.subst_inner(var, by, by_vars), b.subst_inner(var, by, by_vars)),
            Kind::Forall(v, a) => {
                if &**v == var || !a.free_vars().iter().any(|x| &**x == var) {
                    return self.clone();
                }
                if by_vars.contains(v) {
                    // rename the binder away from the incoming term's variables
                    let mut avoid = by_vars.to_vec();
                    avoid.extend(a.free_vars());
                    let mut i = 0;
                    let fresh = loop {
                        let cand = format!("{}{}", v, i);
                        if !avoid.iter().any(|x| **x == *cand) {
                            break cand;
                        }
                        i += 1;
                    };
                    let renamed = a.subst(v, &Term::Var(sym(&fresh)));
                    return Self::forall(&fresh, renamed.subst_inner(var, by, by_vars));
                }
                Self::mk(Kind::Forall(v.clone(), a.subst_inner(var, by, by_vars)))
            }
        }
    }

    /// Nesting depth of inline quotation. Named quotes count as zero.
    pub fn quote_depth(&self) -> usize {
        match self.kind() {
            Kind::Eq(s, t) => s.quote_depth().max(t.quote_depth()),
            Kind::Atom(_, args) => args.iter().map(Term::quote_depth).max().unwrap_or(0),
            Kind::Truth(t) => t.quote_depth(),
            Kind::Falsum => 0,
            Kind::Not(a) | Kind::Box(a) | Kind::Forall(_, a) => a.quote_depth(),
            Kind::And(a, b) | Kind::Imp(a, b) | Kind::Would(a, b) => a.quote_depth().max(b.quote_depth()),
        }
    }

    fn any(&self, pred: &dyn Fn(&Kind) -> bool) -> bool {
        pred(self.kind())
            || match self.kind() {
                Kind::Not(a) | Kind::Box(a) | Kind::Forall(_, a) => a.any(pred),
                Kind::And(a, b) | Kind::Imp(a, b) | Kind::Would(a, b) => a.any(pred) || b.any(pred),
                _ => false,
            }
    }

    pub fn has_conditional(&self) -> bool {
        self.any(&|k| matches!(k, Kind::Imp(..)))
    }
    /// Mentions `->` or `~>` (the fragment excluded from the modal Kleene part).
    pub fn has_conditional_or_would(&self) -> bool {
        self.any(&|k| matches!(k, Kind::Imp(..) | Kind::Would(..)))
    }
    pub fn has_truth(&self) -> bool {
        self.any(&|k| matches!(k, Kind::Truth(_)))
    }
    pub fn has_modal(&self) -> bool {
        self.any(&|k| matches!(k, Kind::Box(_) | Kind::Would(..)))
    }

    /// Every formula obtained by rewriting exactly one occurrence of the closed
    /// term `from` into `to` (quotes are opaque).
    pub fn replace_term_once(&self, from: &Term, to: &Term) -> Vec<Formula> {
        let mut out = Vec::new();
        let args_variants = |args: &[Term], out: &mut Vec<Vec<Term>>| {
            for (i, a) in args.iter().enumerate() {
                for r in a.replace_once(from, to) {
                    let mut v = args.to_vec();
                    v[i] = r;
                    out.push(v);
                }
            }
        };
        match self.kind() {
            Kind::Eq(s, t) => {
                let mut vs = Vec::new();
                args_variants(&[s.clone(), t.clone()], &mut vs);
                out.extend(vs.into_iter().map(|mut v| {
                    let b = v.pop().unwrap();
                    Self::eq_terms(v.pop().unwrap(), b)
                }));
            }
            Kind::Atom(p, args) => {
                let mut vs = Vec::new();
                args_variants(args, &mut vs);
                out.extend(vs.into_iter().map(|v| Self::mk(Kind::Atom(p.clone(), v))));
            }
            Kind::Truth(t) => out.extend(t.replace_once(from, to).into_iter().map(Self::truth)),
            Kind::Falsum => {}
            Kind::Not(a) => out.extend(a.replace_term_once(from, to).into_iter().map(Self::not)),
            Kind::Box(a) => out.extend(a.replace_term_once(from, to).into_iter().map(Self::boxed)),
            Kind::Forall(v, a) => {
                out.extend(a.replace_term_once(from, to).into_iter().map(|b| Self::mk(Kind::Forall(v.clone(), b))))
            }
            Kind::And(a, b) | Kind::Imp(a, b) | Kind::Would(a, b) => {
                let rebuild = |x: Formula, y: Formula| match self.kind() {
                    Kind::And(..) => Self::and(x, y),
                    Kind::Imp(..) => Self::imp(x, y),
                    _ => Self::would(x, y),
                };
                for x in a.replace_term_once(from, to) {
                    out.push(rebuild(x, b.clone()));
                }
                for y in b.replace_term_once(from, to) {
                    out.push(rebuild(a.clone(), y));
                }
            }
        }
        out
    }

    /// Does the constant `c` occur anywhere outside quotes?
    pub fn mentions_constant(&self, c: &str) -> bool {
        fn in_term(t: &Term, c: &str) -> bool {
            match t {
                Term::Const(x) => &**x == c,
                Term::App(_, args) => args.iter().any(|a| in_term(a, c)),
                _ => false,
            }
        }
        match self.kind() {
            Kind::Eq(s, t) => in_term(s, c) || in_term(t, c),
            Kind::Atom(_, args) => args.iter().any(|a| in_term(a, c)),
            Kind::Truth(t) => in_term(t, c),
            Kind::Falsum => false,
            Kind::Not(a) | Kind::Box(a) | Kind::Forall(_, a) => a.mentions_constant(c),
            Kind::And(a, b) | Kind::Imp(a, b) | Kind::Would(a, b) => a.mentions_constant(c) || b.mentions_constant(c),
        }
    }

    /// Closed terms occurring at the top level of atoms (not inside quotes).
    pub fn closed_terms(&self, out: &mut Vec<Term>) {
        match self.kind() {
            Kind::Eq(s, t) => {
                if s.is_closed() {
                    s.subterms(out)
                }
                if t.is_closed() {
                    t.subterms(out)
                }
            }
            Kind::Atom(_, args) => args.iter().filter(|a| a.is_closed()).for_each(|a| a.subterms(out)),
            Kind::Truth(t) => {
                if t.is_closed() {
                    t.subterms(out)
                }
            }
            Kind::Falsum => {}
            Kind::Not(a) | Kind::Box(a) | Kind::Forall(_, a) => a.closed_terms(out),
            Kind::And(a, b) | Kind::Imp(a, b) | Kind::Would(a, b) => {
                a.closed_terms(out);
                b.closed_terms(out);
            }
        }
    }
}

/// Declared vocabulary plus named sentences.
#[derive(Clone, Debug, Default)]
pub struct SentenceEnv {
    pub predicates: BTreeMap<Sym, usize>,
    pub functions: BTreeMap<Sym, usize>,
    /// Declaration order matters for quantifier expansion and printing.
    pub constants: Vec<Sym>,
    pub sentence_order: Vec<Sym>,
    definitions: HashMap<Sym, Formula>,
    by_formula: HashMap<Formula, Sym>,
    /// Allow `[]` and `~>` in parsed text.
    pub modal: bool,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum EnvError {
    #[error("symbol `{0}` declared twice")]
    Duplicate(String),
    #[error("sentence `{0}` has no definition")]
    Undefined(String),
    #[error("definition of `{0}` is not closed")]
    Open(String),
    #[error("constant `{0}` is not declared")]
    UnknownConstant(String),
    #[error("sentences `{0}` and `{1}` have identical definitions")]
    Clash(String, String),
}

impl SentenceEnv {
    pub fn new() -> Self {
        Self::default()
    }

    fn taken(&self, name: &str) -> bool {
        self.predicates.contains_key(name)
            || self.functions.contains_key(name)
            || self.constants.iter().any(|c| &**c == name)
            || self.sentence_order.iter().any(|c| &**c == name)
            || matches!(name, "T" | "A" | "E" | "false" | "true")
    }

    pub fn add_predicate(&mut self, name: &str, arity: usize) -> Result<(), EnvError> {
        if self.taken(name) {
            return Err(EnvError::Duplicate(name.into()));
        }
        self.predicates.insert(sym(name), arity);
        Ok(())
    }
    pub fn add_function(&mut self, name: &str, arity: usize) -> Result<(), EnvError> {
        if self.taken(name) {
            return Err(EnvError::Duplicate(name.into()));
        }
        self.functions.insert(sym(name), arity);
        Ok(())
    }
    pub fn add_constant(&mut self, name: &str) -> Result<(), EnvError> {
        if self.taken(name) {
            return Err(EnvError::Duplicate(name.into()));
        }
        self.constants.push(sym(name));
        Ok(())
    }

    /// Reserves a sentence name so that definitions may quote it before its
    /// body is known.
    pub fn declare_sentence(&mut self, name: &str) -> Result<(), EnvError> {
        if self.taken(name) {
            return Err(EnvError::Duplicate(name.into()));
        }
        self.sentence_order.push(sym(name));
        Ok(())
    }

    pub fn is_sentence(&self, name: &str) -> bool {
        self.sentence_order.iter().any(|c| &**c == name)
    }

    pub fn set_definition(&mut self, name: &str, body: Formula) -> Result<(), EnvError> {
        if !self.is_sentence(name) {
            self.declare_sentence(name)?;
        }
        if !body.is_closed() {
            return Err(EnvError::Open(name.into()));
        }
        if let Some(other) = self.by_formula.get(&body) {
            if &**other != name {
                return Err(EnvError::Clash(other.to_string(), name.into()));
            }
        }
        let key = self.sentence_order.iter().find(|c| &***c == name).unwrap().clone();
        self.by_formula.insert(body.clone(), key.clone());
        self.definitions.insert(key, body);
        Ok(())
    }

    /// Checks every declared sentence got a body, then rewrites inline quotes
    /// of defined sentences into named quotes throughout the definitions.
    pub fn finish(&mut self) -> Result<(), EnvError> {
        for n in &self.sentence_order {
            if !self.definitions.contains_key(n) {
                return Err(EnvError::Undefined(n.to_string()));
            }
        }
        let names = self.sentence_order.clone();
        for n in names {
            let body = self.definitions[&n].clone();
            let canon = self.canonical(&body);
            if canon != body {
                self.by_formula.remove(&body);
                self.by_formula.insert(canon.clone(), n.clone());
                self.definitions.insert(n, canon);
            }
        }
        Ok(())
    }

    pub fn definition(&self, name: &str) -> Option<&Formula> {
        self.definitions.get(name)
    }

    pub fn named(&self) -> impl Iterator<Item = (&Sym, &Formula)> {
        self.sentence_order.iter().map(move |n| (n, &self.definitions[n]))
    }

    pub fn name_of(&self, f: &Formula) -> Option<&Sym> {
        self.by_formula.get(f)
    }

    /// The quote term for a closed sentence.
    pub fn quote(&self, f: &Formula) -> Term {
        match self.by_formula.get(f) {
            Some(n) => Term::Quote(QuoteRef::Name(n.clone())),
            None => Term::Quote(QuoteRef::Inline(f.clone())),
        }
    }

    /// The sentence a quote term denotes.
    pub fn quoted<'a>(&'a self, q: &'a QuoteRef) -> Option<&'a Formula> {
        match q {
            QuoteRef::Name(n) => self.definitions.get(n),
            QuoteRef::Inline(f) => Some(f),
        }
    }

    pub fn canonical(&self, f: &Formula) -> Formula {
        let ct = |t: &Term| self.canonical_term(t);
        match f.kind() {
            Kind::Eq(s, t) => Formula::eq_terms(ct(s), ct(t)),
            Kind::Atom(p, args) => Formula::mk(Kind::Atom(p.clone(), args.iter().map(ct).collect())),
            Kind::Truth(t) => Formula::truth(ct(t)),
            Kind::Falsum => f.clone(),
            Kind::Not(a) => Formula::not(self.canonical(a)),
            Kind::Box(a) => Formula::boxed(self.canonical(a)),
            Kind::And(a, b) => Formula::and(self.canonical(a), self.canonical(b)),
            Kind::Imp(a, b) => Formula::imp(self.canonical(a), self.canonical(b)),
            Kind::Would(a, b) => Formula::would(self.canonical(a), self.canonical(b)),
            Kind::Forall(v, a) => Formula::mk(Kind::Forall(v.clone(), self.canonical(a))),
        }
    }

    fn canonical_term(&self, t: &Term) -> Term {
        match t {
            Term::Quote(QuoteRef::Inline(f)) => self.quote(&self.canonical(f)),
            Term::App(g, args) => Term::App(g.clone(), args.iter().map(|a| self.canonical_term(a)).collect()),
            t => t.clone(),
        }
    }

    /// Substitutes a declared constant for a variable.
    pub fn instantiate(&self, f: &Formula, var: &str, constant: &str) -> Result<Formula, EnvError> {
        if !self.constants.iter().any(|c| &**c == constant) {
            return Err(EnvError::UnknownConstant(constant.into()));
        }
        Ok(f.subst(var, &Term::Const(sym(constant))))
    }
}

// ---------------------------------------------------------------- printing

fn fmt_term(t: &Term, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match t {
        Term::Var(v) | Term::Const(v) => write!(f, "{}", v),
        Term::App(g, args) => {
            write!(f, "{}(", g)?;
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                fmt_term(a, f)?;
            }
            write!(f, ")")
        }
        Term::Quote(QuoteRef::Name(n)) => write!(f, "'{}'", n),
        Term::Quote(QuoteRef::Inline(g)) => write!(f, "'{}'", g),
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_term(self, f)
    }
}

// precedence: 1 = conditionals (right assoc), 2 = conjunction, 3 = prefix / atoms
fn prec(k: &Kind) -> u8 {
    match k {
        Kind::Imp(..) | Kind::Would(..) => 1,
        Kind::And(..) => 2,
        _ => 3,
    }
}

fn fmt_formula(x: &Formula, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let wrap = |g: &Formula, min: u8, f: &mut fmt::Formatter<'_>| -> fmt::Result {
        if prec(g.kind()) < min {
            write!(f, "(")?;
            fmt_formula(g, f)?;
            write!(f, ")")
        } else {
            fmt_formula(g, f)
        }
    };
    match x.kind() {
        Kind::Eq(s, t) => {
            fmt_term(s, f)?;
            write!(f, " = ")?;
            fmt_term(t, f)
        }
        Kind::Atom(p, args) => {
            write!(f, "{}", p)?;
            if !args.is_empty() {
                write!(f, "(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    fmt_term(a, f)?;
                }
                write!(f, ")")?;
            }
            Ok(())
        }
        Kind::Truth(t) => {
            write!(f, "T(")?;
            fmt_term(t, f)?;
            write!(f, ")")
        }
        Kind::Falsum => write!(f, "false"),
        Kind::Not(a) => {
            if let Kind::Eq(..) = a.kind() {
                // `~a = b` would re-parse fine, but keep it visually unambiguous
                write!(f, "~(")?;
                fmt_formula(a, f)?;
                return write!(f, ")");
            }
            write!(f, "~")?;
            wrap(a, 3, f)
        }
        Kind::Box(a) => {
            write!(f, "[]")?;
            wrap(a, 3, f)
        }
        Kind::Forall(v, a) => {
            write!(f, "A {} ", v)?;
            wrap(a, 3, f)
        }
        Kind::And(a, b) => {
            wrap(a, 2, f)?;
            write!(f, " & ")?;
            wrap(b, 3, f)
        }
        Kind::Imp(a, b) | Kind::Would(a, b) => {
            wrap(a, 2, f)?;
            write!(f, "{}", if matches!(x.kind(), Kind::Imp(..)) { " -> " } else { " ~> " })?;
            wrap(b, 1, f)
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_formula(self, f)
    }
}
