//! Backward proof search over set sequents.
//!
//! Principal formulas are kept in premises, so every rule except `->r` and
//! cut only ever adds formulas. Those rules are invertible and are applied
//! eagerly; at a saturated node the first applicable branching rule is taken
//! and, failing that, `->r` and cut are tried one by one.

use super::{Calculus, Limits, ProofTree, Rule, Sequent};
use crate::bits::Bits;
use crate::syntax::{Formula, Kind, SentenceEnv, Sym, Term};
use std::collections::{HashMap, HashSet};
use std::rc::Rc;

/// Result of one query.
#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    /// The tree is present when the query asked for one.
    Proved(Option<ProofTree>),
    NotProved,
    /// Budget or eigenvariable limit hit before a verdict.
    Unknown,
}

impl Outcome {
    pub fn is_proved(&self) -> bool {
        matches!(self, Outcome::Proved(_))
    }
}

const EIGEN_PREFIX: &str = "$y";

struct Info {
    literal: bool,
    eigens: Vec<Sym>,
    /// terms of an identity literal (for Ref)
    id_terms: Vec<Term>,
}

struct Step {
    rule: Rule,
    left: Vec<usize>,
    right: Vec<usize>,
}

enum Res {
    Proved(Option<Rc<ProofTree>>),
    /// `clean` is false when a loop cut or a limit was involved
    Failed { clean: bool },
}

pub struct Prover<'a> {
    calc: Calculus,
    identity: bool,
    env: &'a SentenceEnv,
    limits: Limits,
    constants: Vec<Term>,
    cut_pool: Vec<Formula>,
    forms: Vec<Formula>,
    info: Vec<Info>,
    ids: HashMap<Formula, usize>,
    proved: HashMap<(Bits, Bits), Option<Rc<ProofTree>>>,
    failed: HashSet<(Bits, Bits, usize)>,
    /// closed compound terms of the current query; the failure memo is only
    /// valid for a fixed pool
    query_terms: Vec<Term>,
    nodes: usize,
    limit_hit: bool,
    build: bool,
}

impl<'a> Prover<'a> {
    /// Term pool for quantifier rules: the declared constants plus any closed
    /// non-quote terms in the query, plus eigenvariables as they appear.
    pub fn new(calc: Calculus, identity: bool, env: &'a SentenceEnv, limits: Limits) -> Prover<'a> {
        let constants = env.constants.iter().map(|c| Term::Const(c.clone())).collect();
        Prover {
            calc,
            identity,
            env,
            limits,
            constants,
            cut_pool: Vec::new(),
            forms: Vec::new(),
            info: Vec::new(),
            ids: HashMap::new(),
            proved: HashMap::new(),
            failed: HashSet::new(),
            query_terms: Vec::new(),
            nodes: 0,
            limit_hit: false,
            build: false,
        }
    }

    /// Formulas analytic cut may use; only consulted when `cut_depth > 0`.
    pub fn with_cut_pool(mut self, pool: Vec<Formula>) -> Self {
        self.cut_pool = pool;
        self.failed.clear();
        self
    }

    pub fn calculus(&self) -> Calculus {
        self.calc
    }
    pub fn identity(&self) -> bool {
        self.identity
    }
    pub fn limits(&self) -> Limits {
        self.limits
    }
    /// Nodes expanded by the last query.
    pub fn nodes_used(&self) -> usize {
        self.nodes
    }

    /// Search with proof-tree construction.
    pub fn prove(&mut self, gamma: &[Formula], delta: &[Formula]) -> Outcome {
        self.run(gamma, delta, true)
    }

    /// Search without building a tree (faster; used by the saturation oracle).
    pub fn decide(&mut self, gamma: &[Formula], delta: &[Formula]) -> Outcome {
        self.run(gamma, delta, false)
    }

    fn run(&mut self, gamma: &[Formula], delta: &[Formula], build: bool) -> Outcome {
        self.build = build;
        self.nodes = 0;
        self.limit_hit = false;
        let mut terms = Vec::new();
        for f in gamma.iter().chain(delta) {
            let mut ts = Vec::new();
            f.closed_terms(&mut ts);
            for t in ts {
                if matches!(t, Term::App(..)) && !terms.contains(&t) {
                    terms.push(t);
                }
            }
        }
        if terms != self.query_terms {
            self.query_terms = terms;
            self.failed.clear();
        }
        let mut g = Bits::default();
        let mut d = Bits::default();
        for f in gamma {
            let i = self.id(f);
            g.set(i);
        }
        for f in delta {
            let i = self.id(f);
            d.set(i);
        }
        let mut ancestors = Vec::new();
        match self.search(g, d, self.limits.cut_depth, &mut ancestors) {
            Res::Proved(t) => Outcome::Proved(t.map(|t| (*t).clone())),
            Res::Failed { .. } if self.limit_hit => Outcome::Unknown,
            Res::Failed { .. } => Outcome::NotProved,
        }
    }

    fn id(&mut self, f: &Formula) -> usize {
        if let Some(&i) = self.ids.get(f) {
            return i;
        }
        let i = self.forms.len();
        let mut eigens = Vec::new();
        let mut ts = Vec::new();
        f.closed_terms(&mut ts);
        for t in &ts {
            if let Term::Const(c) = t {
                if c.starts_with(EIGEN_PREFIX) && !eigens.contains(c) {
                    eigens.push(c.clone());
                }
            }
        }
        let mut id_terms = Vec::new();
        let core = f.negand().unwrap_or(f);
        if let Kind::Eq(s, t) = core.kind() {
            if s.is_closed() {
                id_terms.push(s.clone());
            }
            if t.is_closed() && t != s {
                id_terms.push(t.clone());
            }
        }
        self.info.push(Info { literal: self.calc.is_literal(f), eigens, id_terms });
        self.forms.push(f.clone());
        self.ids.insert(f.clone(), i);
        i
    }

    fn sequent(&self, g: &Bits, d: &Bits) -> Sequent {
        Sequent::new(g.iter().map(|i| self.forms[i].clone()).collect(), d.iter().map(|i| self.forms[i].clone()).collect())
    }

    fn axiom(&self, g: &Bits, d: &Bits) -> Option<usize> {
        g.iter().find(|&i| d.get(i) && self.info[i].literal)
    }

    fn eigens_in(&self, g: &Bits, d: &Bits) -> Vec<Sym> {
        let mut out: Vec<Sym> = Vec::new();
        for i in g.iter().chain(d.iter()) {
            for e in &self.info[i].eigens {
                if !out.contains(e) {
                    out.push(e.clone());
                }
            }
        }
        out
    }

    fn pool(&self, eigens: &[Sym]) -> Vec<Term> {
        let mut p = self.constants.clone();
        p.extend(self.query_terms.iter().cloned());
        p.extend(eigens.iter().map(|e| Term::Const(e.clone())));
        p
    }

    /// A fresh eigen name, or `None` when the per-branch limit is reached.
    fn fresh(&mut self, eigens: &[Sym]) -> Option<Sym> {
        if eigens.len() >= self.limits.max_eigen {
            self.limit_hit = true;
            return None;
        }
        let mut k = 0;
        loop {
            let name = format!("{}{}", EIGEN_PREFIX, k);
            if !eigens.iter().any(|e| **e == *name) {
                return Some(Sym::from(name.as_str()));
            }
            k += 1;
        }
    }

    fn has_eigen_instance(&self, side: &Bits, v: &str, body: &Formula, negate: bool, eigens: &[Sym]) -> bool {
        eigens.iter().any(|e| {
            let inst = body.subst(v, &Term::Const(e.clone()));
            let inst = if negate { Formula::not(inst) } else { inst };
            self.ids.get(&inst).is_some_and(|&i| side.get(i))
        })
    }

    /// Applies every applicable adding rule until nothing changes or the
    /// node closes by an axiom.
    fn saturate(&mut self, g: &mut Bits, d: &mut Bits, steps: &mut Vec<Step>) {
        loop {
            if self.axiom(g, d).is_some() {
                return;
            }
            let mut changed = false;
            let eigens = self.eigens_in(g, d);
            let pool = self.pool(&eigens);
            let mut cands: Vec<(Rule, Vec<Formula>, Vec<Formula>)> = Vec::new();
            let gl: Vec<usize> = g.iter().collect();
            let dl: Vec<usize> = d.iter().collect();
            for &i in &gl {
                let f = self.forms[i].clone();
                self.left_rules(&f, g, &pool, &eigens, &mut cands);
            }
            for &i in &dl {
                let f = self.forms[i].clone();
                self.right_rules(&f, d, &pool, &eigens, &mut cands);
            }
            if self.identity {
                self.identity_rules(&gl, &dl, &mut cands);
            }
            for (rule, l, r) in cands {
                let mut left = Vec::new();
                let mut right = Vec::new();
                for f in &l {
                    let i = self.id(f);
                    if !g.get(i) && !left.contains(&i) {
                        left.push(i);
                    }
                }
                for f in &r {
                    let i = self.id(f);
                    if !d.get(i) && !right.contains(&i) {
                        right.push(i);
                    }
                }
                if left.is_empty() && right.is_empty() {
                    continue;
                }
                // eigen rules must stay fresh relative to what was added so far
                if let Rule::ForallR(_, y) | Rule::NegForallL(_, y) = &rule {
                    let now = self.eigens_in(g, d);
                    if now.contains(y) {
                        continue;
                    }
                }
                for &i in &left {
                    g.set(i);
                }
                for &i in &right {
                    d.set(i);
                }
                steps.push(Step { rule, left, right });
                changed = true;
                if self.axiom(g, d).is_some() {
                    return;
                }
            }
            if !changed {
                return;
            }
        }
    }

    fn left_rules(
        &mut self,
        f: &Formula,
        g: &Bits,
        pool: &[Term],
        eigens: &[Sym],
        out: &mut Vec<(Rule, Vec<Formula>, Vec<Formula>)>,
    ) {
        let calc = self.calc;
        match f.kind() {
            Kind::Not(a) => {
                if calc.is_literal(a) {
                    out.push((Rule::NegL(f.clone()), vec![], vec![a.clone()]));
                }
                match a.kind() {
                    Kind::Not(b) => out.push((Rule::DnL(f.clone()), vec![b.clone()], vec![])),
                    Kind::Forall(v, b) => {
                        if !self.has_eigen_instance(g, v, b, true, eigens) {
                            if let Some(y) = self.fresh(eigens) {
                                let inst = Formula::not(b.subst(v, &Term::Const(y.clone())));
                                out.push((Rule::NegForallL(f.clone(), y), vec![inst], vec![]));
                            }
                        }
                    }
                    Kind::Imp(x, y) if calc.cond_rules() => {
                        out.push((Rule::NegImpL(f.clone(), 0), vec![x.clone()], vec![]));
                        out.push((Rule::NegImpL(f.clone(), 1), vec![Formula::not(y.clone())], vec![]));
                    }
                    Kind::Truth(Term::Quote(q)) if calc.truth_rules() => {
                        if let Some(phi) = self.env.quoted(q) {
                            out.push((Rule::NegTL(f.clone()), vec![Formula::not(phi.clone())], vec![]));
                        }
                    }
                    _ => {}
                }
            }
            Kind::And(a, b) => {
                out.push((Rule::AndL(f.clone(), 0), vec![a.clone()], vec![]));
                out.push((Rule::AndL(f.clone(), 1), vec![b.clone()], vec![]));
            }
            Kind::Forall(v, b) => {
                for t in pool {
                    out.push((Rule::ForallL(f.clone(), t.clone()), vec![b.subst(v, t)], vec![]));
                }
            }
            Kind::Truth(Term::Quote(q)) if calc.truth_rules() => {
                if let Some(phi) = self.env.quoted(q) {
                    out.push((Rule::TL(f.clone()), vec![phi.clone()], vec![]));
                }
            }
            _ => {}
        }
    }

    fn right_rules(
        &mut self,
        f: &Formula,
        d: &Bits,
        pool: &[Term],
        eigens: &[Sym],
        out: &mut Vec<(Rule, Vec<Formula>, Vec<Formula>)>,
    ) {
        let calc = self.calc;
        match f.kind() {
            Kind::Not(a) => match a.kind() {
                Kind::Not(b) => out.push((Rule::DnR(f.clone()), vec![], vec![b.clone()])),
                Kind::And(x, y) => {
                    out.push((Rule::NegAndR(f.clone(), 0), vec![], vec![Formula::not(x.clone())]));
                    out.push((Rule::NegAndR(f.clone(), 1), vec![], vec![Formula::not(y.clone())]));
                }
                Kind::Forall(v, b) => {
                    for t in pool {
                        out.push((Rule::NegForallR(f.clone(), t.clone()), vec![], vec![Formula::not(b.subst(v, t))]));
                    }
                }
                Kind::Truth(Term::Quote(q)) if calc.truth_rules() => {
                    if let Some(phi) = self.env.quoted(q) {
                        out.push((Rule::NegTR(f.clone()), vec![], vec![Formula::not(phi.clone())]));
                    }
                }
                Kind::Eq(..) if self.identity => out.push((Rule::NeqR(f.clone()), vec![a.clone()], vec![])),
                _ => {}
            },
            Kind::Forall(v, b) => {
                if !self.has_eigen_instance(d, v, b, false, eigens) {
                    if let Some(y) = self.fresh(eigens) {
                        let inst = b.subst(v, &Term::Const(y.clone()));
                        out.push((Rule::ForallR(f.clone(), y), vec![], vec![inst]));
                    }
                }
            }
            Kind::Truth(Term::Quote(q)) if calc.truth_rules() => {
                if let Some(phi) = self.env.quoted(q) {
                    out.push((Rule::TR(f.clone()), vec![], vec![phi.clone()]));
                }
            }
            _ => {}
        }
    }

    fn identity_rules(&mut self, gl: &[usize], dl: &[usize], out: &mut Vec<(Rule, Vec<Formula>, Vec<Formula>)>) {
        let mut terms: Vec<Term> = Vec::new();
        for &i in gl.iter().chain(dl) {
            for t in &self.info[i].id_terms {
                if !terms.contains(t) {
                    terms.push(t.clone());
                }
            }
        }
        for t in terms {
            out.push((Rule::Ref(t.clone()), vec![Formula::eq_terms(t.clone(), t)], vec![]));
        }
        for &e in gl {
            let eq = self.forms[e].clone();
            let Kind::Eq(s, t) = eq.kind() else { continue };
            if s == t || !s.is_closed() || !t.is_closed() {
                continue;
            }
            for &l in gl {
                if !self.info[l].literal {
                    continue;
                }
                let lit = self.forms[l].clone();
                for r in lit.replace_term_once(s, t) {
                    out.push((Rule::Rep(eq.clone(), lit.clone(), r.clone()), vec![r], vec![]));
                }
            }
        }
    }

    /// Branching rules whose premises both add something.
    fn branch(&mut self, g: &Bits, d: &Bits) -> Option<(Rule, [(Vec<Formula>, Vec<Formula>); 2])> {
        let cond = self.calc.cond_rules();
        let new_l = |s: &Self, f: &Formula| s.ids.get(f).map_or(true, |&i| !g.get(i));
        let new_r = |s: &Self, f: &Formula| s.ids.get(f).map_or(true, |&i| !d.get(i));
        for i in g.iter() {
            let f = &self.forms[i];
            match f.kind() {
                Kind::Not(a) => {
                    if let Kind::And(x, y) = a.kind() {
                        let (nx, ny) = (Formula::not(x.clone()), Formula::not(y.clone()));
                        if new_l(self, &nx) && new_l(self, &ny) {
                            return Some((Rule::NegAndL(f.clone()), [(vec![nx], vec![]), (vec![ny], vec![])]));
                        }
                    }
                }
                Kind::Imp(x, y) if cond => {
                    if new_r(self, x) && new_l(self, y) {
                        return Some((Rule::ImpL(f.clone()), [(vec![], vec![x.clone()]), (vec![y.clone()], vec![])]));
                    }
                }
                _ => {}
            }
        }
        for i in d.iter() {
            let f = &self.forms[i];
            match f.kind() {
                Kind::And(x, y) => {
                    if new_r(self, x) && new_r(self, y) {
                        return Some((Rule::AndR(f.clone()), [(vec![], vec![x.clone()]), (vec![], vec![y.clone()])]));
                    }
                }
                Kind::Not(a) if cond => {
                    if let Kind::Imp(x, y) = a.kind() {
                        let ny = Formula::not(y.clone());
                        if new_r(self, x) && new_r(self, &ny) {
                            return Some((Rule::NegImpR(f.clone()), [(vec![], vec![x.clone()]), (vec![], vec![ny])]));
                        }
                    }
                }
                _ => {}
            }
        }
        None
    }

    fn extend(&mut self, g: &Bits, d: &Bits, l: &[Formula], r: &[Formula]) -> (Bits, Bits) {
        let (mut g2, mut d2) = (g.clone(), d.clone());
        for f in l {
            let i = self.id(f);
            g2.set(i);
        }
        for f in r {
            let i = self.id(f);
            d2.set(i);
        }
        (g2, d2)
    }

    fn search(&mut self, g0: Bits, d0: Bits, cuts: usize, ancestors: &mut Vec<(Bits, Bits)>) -> Res {
        self.nodes += 1;
        if self.nodes > self.limits.max_nodes {
            self.limit_hit = true;
            return Res::Failed { clean: false };
        }
        let (mut g, mut d) = (g0.clone(), d0.clone());
        let mut steps = Vec::new();
        let hit_before = self.limit_hit;
        self.limit_hit = false;
        self.saturate(&mut g, &mut d, &mut steps);
        let eigen_capped = self.limit_hit;
        self.limit_hit |= hit_before;
        let res = self.search_saturated(&g, &d, cuts, ancestors, eigen_capped);
        match res {
            Res::Proved(Some(t)) if self.build => Res::Proved(Some(self.wrap(t, &g, &d, steps))),
            other => other,
        }
    }

    fn wrap(&self, mut tree: Rc<ProofTree>, g: &Bits, d: &Bits, steps: Vec<Step>) -> Rc<ProofTree> {
        let (mut g, mut d) = (g.clone(), d.clone());
        for step in steps.into_iter().rev() {
            for i in &step.left {
                g.unset(*i);
            }
            for i in &step.right {
                d.unset(*i);
            }
            let premise = Rc::try_unwrap(tree).unwrap_or_else(|rc| (*rc).clone());
            tree = Rc::new(ProofTree { sequent: self.sequent(&g, &d), rule: step.rule, premises: vec![premise] });
        }
        tree
    }

    fn search_saturated(
        &mut self,
        g: &Bits,
        d: &Bits,
        cuts: usize,
        ancestors: &mut Vec<(Bits, Bits)>,
        eigen_capped: bool,
    ) -> Res {
        if let Some(i) = self.axiom(g, d) {
            let t = self.build.then(|| {
                Rc::new(ProofTree { sequent: self.sequent(g, d), rule: Rule::Ax(self.forms[i].clone()), premises: vec![] })
            });
            return Res::Proved(t);
        }
        let key = (g.clone().trimmed(), d.clone().trimmed());
        if let Some(t) = self.proved.get(&key) {
            if !self.build || t.is_some() {
                return Res::Proved(t.clone());
            }
        }
        if self.failed.contains(&(key.0.clone(), key.1.clone(), cuts)) {
            return Res::Failed { clean: true };
        }
        // a node no weaker than an open ancestor can't help
        if ancestors.iter().any(|(ga, da)| ga == &key.0 && key.1.is_subset(da)) {
            return Res::Failed { clean: false };
        }
        ancestors.push(key.clone());
        let res = self.expand(g, d, cuts, ancestors);
        ancestors.pop();
        let res = match res {
            Res::Failed { clean } => Res::Failed { clean: clean && !eigen_capped },
            p => p,
        };
        match &res {
            Res::Proved(t) => {
                self.proved.insert(key, t.clone());
            }
            Res::Failed { clean: true } => {
                self.failed.insert((key.0, key.1, cuts));
            }
            _ => {}
        }
        res
    }

    fn expand(&mut self, g: &Bits, d: &Bits, cuts: usize, ancestors: &mut Vec<(Bits, Bits)>) -> Res {
        let seq = |s: &Self| s.sequent(g, d);
        if let Some((rule, prem)) = self.branch(g, d) {
            let mut subs = Vec::new();
            let mut clean = true;
            for (l, r) in &prem {
                let (g2, d2) = self.extend(g, d, l, r);
                match self.search(g2, d2, cuts, ancestors) {
                    Res::Proved(t) => subs.push(t),
                    Res::Failed { clean: c } => {
                        clean &= c;
                        return Res::Failed { clean };
                    }
                }
            }
            let t = self.build.then(|| {
                Rc::new(ProofTree {
                    sequent: seq(self),
                    rule,
                    premises: subs.into_iter().map(|t| (*t.expect("tree")).clone()).collect(),
                })
            });
            return Res::Proved(t);
        }
        let mut clean = true;
        if self.calc.cond_rules() {
            let imps: Vec<Formula> =
                d.iter().map(|i| self.forms[i].clone()).filter(|f| matches!(f.kind(), Kind::Imp(..))).collect();
            for f in imps {
                let Kind::Imp(x, y) = f.kind() else { unreachable!() };
                let (g2, _) = self.extend(g, d, std::slice::from_ref(x), &[]);
                let mut d2 = Bits::default();
                let yi = self.id(y);
                d2.set(yi);
                match self.search(g2, d2, cuts, ancestors) {
                    Res::Proved(t) => {
                        let t = self.build.then(|| {
                            Rc::new(ProofTree {
                                sequent: seq(self),
                                rule: Rule::ImpR(f.clone()),
                                premises: vec![(*t.expect("tree")).clone()],
                            })
                        });
                        return Res::Proved(t);
                    }
                    Res::Failed { clean: c } => clean &= c,
                }
            }
        }
        if cuts > 0 {
            for c in self.cut_pool.clone() {
                let ci = self.id(&c);
                if g.get(ci) || d.get(ci) {
                    continue;
                }
                let (g1, d1) = self.extend(g, d, &[], std::slice::from_ref(&c));
                let first = match self.search(g1, d1, cuts - 1, ancestors) {
                    Res::Proved(t) => t,
                    Res::Failed { clean: k } => {
                        clean &= k;
                        continue;
                    }
                };
                let (g2, d2) = self.extend(g, d, std::slice::from_ref(&c), &[]);
                match self.search(g2, d2, cuts - 1, ancestors) {
                    Res::Proved(second) => {
                        let t = self.build.then(|| {
                            Rc::new(ProofTree {
                                sequent: seq(self),
                                rule: Rule::Cut(c.clone()),
                                premises: vec![(*first.expect("tree")).clone(), (*second.expect("tree")).clone()],
                            })
                        });
                        return Res::Proved(t);
                    }
                    Res::Failed { clean: k } => clean &= k,
                }
            }
        }
        Res::Failed { clean }
    }
}
