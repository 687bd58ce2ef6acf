//! Set-sequent calculi K3, N3, K3T (and N3 with the truth rules), backward
//! proof search, proof checking and the saturation oracle.

mod check;
mod search;

pub use check::check_proof;
pub use search::{Outcome, Prover};

use crate::syntax::{Formula, Kind, SentenceEnv, Sym, Term};
use serde_json::{json, Value};
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Calculus {
    K3,
    N3,
    K3T,
    /// N3 plus the four truth rules.
    N3T,
}

impl Calculus {
    pub fn cond_rules(self) -> bool {
        matches!(self, Calculus::N3 | Calculus::N3T)
    }
    pub fn truth_rules(self) -> bool {
        matches!(self, Calculus::K3T | Calculus::N3T)
    }
    pub fn name(self) -> &'static str {
        match self {
            Calculus::K3 => "k3",
            Calculus::N3 => "n3",
            Calculus::K3T => "k3t",
            Calculus::N3T => "n3t",
        }
    }
    pub fn parse(s: &str) -> Option<Calculus> {
        Some(match s.to_ascii_lowercase().as_str() {
            "k3" => Calculus::K3,
            "n3" => Calculus::N3,
            "k3t" => Calculus::K3T,
            "n3t" => Calculus::N3T,
            _ => return None,
        })
    }

    /// Atomic for this calculus. Without conditional rules a conditional is
    /// an unanalysed atom; `[]` and `~>` are atoms everywhere.
    pub fn is_atomic(self, f: &Formula) -> bool {
        match f.kind() {
            Kind::Eq(..) | Kind::Atom(..) | Kind::Truth(_) | Kind::Falsum | Kind::Box(_) | Kind::Would(..) => true,
            Kind::Imp(..) => !self.cond_rules(),
            _ => false,
        }
    }

    pub fn is_literal(self, f: &Formula) -> bool {
        match f.kind() {
            Kind::Not(a) => self.is_atomic(a),
            _ => self.is_atomic(f),
        }
    }
}

impl fmt::Display for Calculus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Search limits. `cut_depth` bounds nested applications of analytic cut
/// (cut formulas are drawn from the prover's cut pool).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    pub max_nodes: usize,
    pub max_eigen: usize,
    pub cut_depth: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_nodes: 200_000, max_eigen: 3, cut_depth: 0 }
    }
}

/// A rule instance. Each variant carries its principal formula and whatever
/// else is needed to check it.
#[derive(Clone, Debug, PartialEq)]
pub enum Rule {
    Ax(Formula),
    NegL(Formula),
    DnL(Formula),
    DnR(Formula),
    AndL(Formula, usize),
    AndR(Formula),
    NegAndL(Formula),
    NegAndR(Formula, usize),
    ForallL(Formula, Term),
    ForallR(Formula, Sym),
    NegForallL(Formula, Sym),
    NegForallR(Formula, Term),
    ImpL(Formula),
    ImpR(Formula),
    /// Left rule for a negated conditional; index 0 adds the antecedent,
    /// index 1 the negated consequent.
    NegImpL(Formula, usize),
    NegImpR(Formula),
    TL(Formula),
    TR(Formula),
    NegTL(Formula),
    NegTR(Formula),
    Ref(Term),
    /// identity `s = t`, the literal rewritten, and the result
    Rep(Formula, Formula, Formula),
    NeqR(Formula),
    Cut(Formula),
}

impl Rule {
    pub fn label(&self) -> &'static str {
        match self {
            Rule::Ax(_) => "ax",
            Rule::NegL(_) => "~l",
            Rule::DnL(_) => "dn-l",
            Rule::DnR(_) => "dn-r",
            Rule::AndL(..) => "&l",
            Rule::AndR(_) => "&r",
            Rule::NegAndL(_) => "~&l",
            Rule::NegAndR(..) => "~&r",
            Rule::ForallL(..) => "Al",
            Rule::ForallR(..) => "Ar",
            Rule::NegForallL(..) => "~Al",
            Rule::NegForallR(..) => "~Ar",
            Rule::ImpL(_) => "->l",
            Rule::ImpR(_) => "->r",
            Rule::NegImpL(..) => "~->l",
            Rule::NegImpR(_) => "~->r",
            Rule::TL(_) => "Tl",
            Rule::TR(_) => "Tr",
            Rule::NegTL(_) => "~Tl",
            Rule::NegTR(_) => "~Tr",
            Rule::Ref(_) => "Ref",
            Rule::Rep(..) => "Rep",
            Rule::NeqR(_) => "=~r",
            Rule::Cut(_) => "cut",
        }
    }

    pub fn principal(&self) -> Option<&Formula> {
        match self {
            Rule::Ref(_) => None,
            Rule::Rep(e, _, _) => Some(e),
            Rule::Ax(f)
            | Rule::NegL(f)
            | Rule::DnL(f)
            | Rule::DnR(f)
            | Rule::AndL(f, _)
            | Rule::AndR(f)
            | Rule::NegAndL(f)
            | Rule::NegAndR(f, _)
            | Rule::ForallL(f, _)
            | Rule::ForallR(f, _)
            | Rule::NegForallL(f, _)
            | Rule::NegForallR(f, _)
            | Rule::ImpL(f)
            | Rule::ImpR(f)
            | Rule::NegImpL(f, _)
            | Rule::NegImpR(f)
            | Rule::TL(f)
            | Rule::TR(f)
            | Rule::NegTL(f)
            | Rule::NegTR(f)
            | Rule::NeqR(f)
            | Rule::Cut(f) => Some(f),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sequent {
    pub ante: Vec<Formula>,
    pub succ: Vec<Formula>,
}

fn dedup(v: Vec<Formula>) -> Vec<Formula> {
    let mut out: Vec<Formula> = Vec::with_capacity(v.len());
    for f in v {
        if !out.contains(&f) {
            out.push(f)
        }
    }
    out
}

impl Sequent {
    pub fn new(ante: Vec<Formula>, succ: Vec<Formula>) -> Sequent {
        Sequent { ante: dedup(ante), succ: dedup(succ) }
    }
}

fn join(v: &[Formula]) -> String {
    v.iter().map(|f| f.to_string()).collect::<Vec<_>>().join(", ")
}

impl fmt::Display for Sequent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let a = join(&self.ante);
        let s = join(&self.succ);
        match (a.is_empty(), s.is_empty()) {
            (true, true) => write!(f, "=>"),
            (true, false) => write!(f, "=> {}", s),
            (false, true) => write!(f, "{} =>", a),
            (false, false) => write!(f, "{} => {}", a, s),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProofTree {
    pub sequent: Sequent,
    pub rule: Rule,
    pub premises: Vec<ProofTree>,
}

impl ProofTree {
    pub fn size(&self) -> usize {
        1 + self.premises.iter().map(ProofTree::size).sum::<usize>()
    }

    pub fn height(&self) -> usize {
        1 + self.premises.iter().map(ProofTree::height).max().unwrap_or(0)
    }

    /// Indented text, conclusion first, one node per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        self.text_into(0, &mut out);
        out
    }

    fn text_into(&self, depth: usize, out: &mut String) {
        out.push_str(&"  ".repeat(depth));
        out.push_str(&format!("{}   [{}", self.sequent, self.rule.label()));
        if let Some(p) = self.rule.principal() {
            out.push_str(&format!(" {}", p));
        }
        out.push_str("]\n");
        for p in &self.premises {
            p.text_into(depth + 1, out);
        }
    }

    /// Nested machine-readable record.
    pub fn to_json(&self) -> Value {
        let strs = |v: &[Formula]| v.iter().map(|f| f.to_string()).collect::<Vec<_>>();
        json!({
            "antecedent": strs(&self.sequent.ante),
            "succedent": strs(&self.sequent.succ),
            "rule": self.rule.label(),
            "principal": self.rule.principal().map(|f| f.to_string()),
            "premises": self.premises.iter().map(ProofTree::to_json).collect::<Vec<_>>(),
        })
    }
}

/// Saturation verdict.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Saturation {
    Saturated,
    NotSaturated,
    Indeterminate,
}

/// `S` is saturated iff `S => universe \ S` has no proof. An exhausted search
/// budget gives `Indeterminate`.
pub fn saturated(prover: &mut Prover<'_>, s: &[Formula], universe: &[Formula]) -> Saturation {
    let rest: Vec<Formula> = universe.iter().filter(|f| !s.contains(f)).cloned().collect();
    match prover.decide(s, &rest) {
        Outcome::Proved(_) => Saturation::NotSaturated,
        Outcome::NotProved => Saturation::Saturated,
        Outcome::Unknown => Saturation::Indeterminate,
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SaturateError {
    #[error("input set is inconsistent")]
    Inconsistent,
    #[error("search budget exhausted")]
    Budget,
}

/// One sweep in universe order keeping a set `E` of excluded sentences with
/// `S => E` unprovable: `phi` joins `S` exactly when `S => E, phi` is
/// provable, otherwise it joins `E`. Only forced sentences are added, so
/// the result is a fixed point of this function. The sweep leans on cut
/// (`S => E, phi` and `S, phi => E` give `S => E`); when the calculus lacks
/// it the final check reports the failure.
pub fn saturate(prover: &mut Prover<'_>, s: &[Formula], universe: &[Formula]) -> Result<Vec<Formula>, SaturateError> {
    match prover.decide(s, &[]) {
        Outcome::Proved(_) => return Err(SaturateError::Inconsistent),
        Outcome::Unknown => return Err(SaturateError::Budget),
        Outcome::NotProved => {}
    }
    let mut cur: Vec<Formula> = dedup(s.to_vec());
    let mut excluded: Vec<Formula> = Vec::new();
    for f in universe {
        if cur.contains(f) || excluded.contains(f) {
            continue;
        }
        excluded.push(f.clone());
        match prover.decide(&cur, &excluded) {
            Outcome::Proved(_) => {
                excluded.pop();
                cur.push(f.clone());
            }
            Outcome::NotProved => {}
            Outcome::Unknown => return Err(SaturateError::Budget),
        }
    }
    match saturated(prover, &cur, universe) {
        Saturation::Saturated => Ok(cur),
        Saturation::Indeterminate => Err(SaturateError::Budget),
        Saturation::NotSaturated => Err(SaturateError::Inconsistent),
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum CurryError {
    #[error("sentence `{0}` is not declared")]
    Undeclared(String),
    #[error("sentence `{0}` is not of the form T('{0}') -> false")]
    Shape(String),
}

/// The Curry argument as a derivation of `=>` false in N3 plus the truth
/// rules: from `T(k) => false` (truth unfolding, then modus ponens against the
/// sentence itself) the conditional `k` follows by `->r`, hence `T(k)` by
/// `Tr`, and a cut on `T(k)` closes the argument.
pub fn curry_derivation(env: &SentenceEnv, name: &str) -> Result<ProofTree, CurryError> {
    let kappa = env.definition(name).ok_or_else(|| CurryError::Undeclared(name.into()))?.clone();
    let tk = match kappa.kind() {
        Kind::Imp(a, b) if matches!(b.kind(), Kind::Falsum) => a.clone(),
        _ => return Err(CurryError::Shape(name.into())),
    };
    match tk.kind() {
        Kind::Truth(Term::Quote(q)) if env.quoted(q) == Some(&kappa) => {}
        _ => return Err(CurryError::Shape(name.into())),
    }
    let bot = Formula::falsum();
    let seq = |a: &[&Formula], s: &[&Formula]| Sequent::new(a.iter().map(|f| (*f).clone()).collect(), s.iter().map(|f| (*f).clone()).collect());
    let leaf = |a: &[&Formula], s: &[&Formula], on: &Formula| ProofTree { sequent: seq(a, s), rule: Rule::Ax(on.clone()), premises: vec![] };

    // T(k), k => false  by ->l on k
    let mp = ProofTree {
        sequent: seq(&[&tk, &kappa], &[&bot]),
        rule: Rule::ImpL(kappa.clone()),
        premises: vec![leaf(&[&tk, &kappa], &[&tk, &bot], &tk), leaf(&[&tk, &kappa, &bot], &[&bot], &bot)],
    };
    // T(k) => false  by Tl (contraction is absorbed by the set antecedent)
    let unfold = ProofTree { sequent: seq(&[&tk], &[&bot]), rule: Rule::TL(tk.clone()), premises: vec![mp] };
    // => k, false  by ->r
    let ded = ProofTree { sequent: seq(&[], &[&kappa, &bot]), rule: Rule::ImpR(kappa.clone()), premises: vec![unfold.clone()] };
    // => T(k), false  by Tr
    let intro = ProofTree { sequent: seq(&[], &[&bot, &tk]), rule: Rule::TR(tk.clone()), premises: vec![ded] };
    Ok(ProofTree { sequent: seq(&[], &[&bot]), rule: Rule::Cut(tk.clone()), premises: vec![intro, unfold] })
}
