//! Valuation functions, admissible families, the theta/Theta iteration and
//! the diagnostics run at its fixed points.
//!
//! A valuation maps each (world, interpretation) cell to a set of universe
//! members, stored as bits over universe indices. Families are finite lists
//! of valuations; successor lists encode which members are admissible above
//! which. The default start enumerates every admissible valuation above the
//! minimal Kleene fixed point once and filters that list at each stage.

use crate::bits::Bits;
use crate::proof::{Calculus, Limits, Outcome, Prover};
use crate::semantics::{Den, Evaluator, Point, Structure, TruthContext};
use crate::syntax::{Formula, Kind, SentenceEnv, Term, Universe};
use serde::Serialize;
use std::collections::HashMap;
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Cond {
    C,
    K3,
    N3,
    Nve,
    /// N3 saturation plus the truth rules; has no fixed point on Curry.
    N3Nve,
}

impl Cond {
    pub const ALL: [Cond; 5] = [Cond::C, Cond::K3, Cond::N3, Cond::Nve, Cond::N3Nve];

    pub fn name(self) -> &'static str {
        match self {
            Cond::C => "c",
            Cond::K3 => "k3",
            Cond::N3 => "n3",
            Cond::Nve => "nve",
            Cond::N3Nve => "n3nve",
        }
    }

    pub fn parse(s: &str) -> Option<Cond> {
        Some(match s.to_ascii_lowercase().replace('-', "").as_str() {
            "c" => Cond::C,
            "k3" => Cond::K3,
            "n3" => Cond::N3,
            "nve" => Cond::Nve,
            "n3nve" => Cond::N3Nve,
            _ => return None,
        })
    }

    /// Calculus whose saturation the condition demands on the whole universe.
    pub fn calculus(self) -> Option<Calculus> {
        match self {
            Cond::C => None,
            Cond::K3 => Some(Calculus::K3),
            Cond::N3 => Some(Calculus::N3),
            Cond::Nve => Some(Calculus::K3T),
            Cond::N3Nve => Some(Calculus::N3T),
        }
    }
}

impl fmt::Display for Cond {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum TruthError {
    #[error("{0}")]
    Input(String),
    #[error("more than {cap} admissible valuations")]
    FamilyTooLarge { cap: usize },
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub limits: Limits,
    /// bound on the number of admissible valuations enumerated
    pub max_family: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { limits: Limits { max_nodes: 20_000, max_eigen: 3, cut_depth: 0 }, max_family: 20_000 }
    }
}

/// Cell `(w, j)` lives at `j * n_w + w`.
#[derive(Clone, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub struct Valuation {
    n_w: usize,
    cells: Vec<Bits>,
}

impl Valuation {
    pub fn empty(n_w: usize, n_j: usize, n: usize) -> Valuation {
        Valuation { n_w, cells: vec![Bits::new(n); n_w * n_j] }
    }
    pub fn n_worlds(&self) -> usize {
        self.n_w
    }
    pub fn n_interps(&self) -> usize {
        self.cells.len() / self.n_w.max(1)
    }
    pub fn cell(&self, w: usize, j: usize) -> &Bits {
        &self.cells[j * self.n_w + w]
    }
    pub fn cell_mut(&mut self, w: usize, j: usize) -> &mut Bits {
        &mut self.cells[j * self.n_w + w]
    }
    pub fn contains(&self, w: usize, j: usize, i: usize) -> bool {
        self.cell(w, j).get(i)
    }
    pub fn insert(&mut self, w: usize, j: usize, i: usize) {
        self.cell_mut(w, j).set(i)
    }
    pub fn leq(&self, other: &Valuation) -> bool {
        self.cells.iter().zip(&other.cells).all(|(a, b)| a.is_subset(b))
    }
    pub fn size(&self) -> usize {
        self.cells.iter().map(Bits::count).sum()
    }
    pub fn sentences(&self, u: &Universe, w: usize, j: usize) -> Vec<Formula> {
        self.cell(w, j).iter().map(|i| u.get(i).clone()).collect()
    }
}

/// A finite set of valuations with the admissibility relation precomputed.
pub struct Family<'u> {
    u: &'u Universe,
    pub members: Vec<Valuation>,
    pub basic: Vec<bool>,
    pub admissible: Vec<bool>,
    succ: Vec<Vec<usize>>,
}

impl<'u> Family<'u> {
    /// `k` is a successor of `m` when `m` is basic, `m <= k`, and `k` is
    /// basic and meets the condition (`admissible[k]`).
    pub fn new(u: &'u Universe, members: Vec<Valuation>, basic: Vec<bool>, admissible: Vec<bool>) -> Family<'u> {
        let n = members.len();
        let mut succ = vec![Vec::new(); n];
        for m in 0..n {
            if !basic[m] {
                continue;
            }
            for k in 0..n {
                if basic[k] && admissible[k] && members[m].leq(&members[k]) {
                    succ[m].push(k);
                }
            }
        }
        Family { u, members, basic, admissible, succ }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }
    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
    pub fn universe(&self) -> &'u Universe {
        self.u
    }
    pub fn position(&self, v: &Valuation) -> Option<usize> {
        self.members.iter().position(|m| m == v)
    }

    /// Sub-family on the given member indices (relation recomputed).
    pub fn restrict(&self, keep: &[usize]) -> Family<'u> {
        Family::new(
            self.u,
            keep.iter().map(|&i| self.members[i].clone()).collect(),
            keep.iter().map(|&i| self.basic[i]).collect(),
            keep.iter().map(|&i| self.admissible[i]).collect(),
        )
    }

    /// Members (other than `m` itself) above member `m`, i.e. the family
    /// generated by it, with `m` placed first.
    pub fn generated_by(&self, m: usize) -> Family<'u> {
        let mut keep = vec![m];
        keep.extend((0..self.len()).filter(|&k| k != m && self.members[m].leq(&self.members[k])));
        self.restrict(&keep)
    }
}

impl TruthContext for Family<'_> {
    fn contains(&self, m: usize, w: usize, j: usize, sentence: &Formula) -> bool {
        self.u.index_of(sentence).is_some_and(|i| self.members[m].contains(w, j, i))
    }
    fn successors(&self, m: usize) -> &[usize] {
        &self.succ[m]
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct CellRecord {
    pub world: String,
    pub interp: String,
    pub sentences: Vec<String>,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct StageRecord {
    pub stage: usize,
    /// total membership count over all cells
    pub size: usize,
    /// admissible valuations above the stage valuation
    pub admissible: usize,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Verification {
    pub theta_fixes_g: bool,
    pub big_theta_fixes_z: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct FixedPointResult {
    pub cond: String,
    /// "fixed-point" or "collapse"
    pub status: String,
    pub stage: usize,
    pub reason: Option<String>,
    pub detail: Option<String>,
    pub valuation: Vec<CellRecord>,
    /// size of Z_g (g together with the admissible valuations above it)
    pub family_size: usize,
    pub stages: Vec<StageRecord>,
    pub verification: Option<Verification>,
    /// saturation queries that ran out of budget (each counted as failed)
    pub indeterminate: usize,
    #[serde(skip)]
    pub g: Valuation,
    /// Z_g, with g first
    #[serde(skip)]
    pub z: Vec<Valuation>,
}

impl FixedPointResult {
    pub fn is_fixed_point(&self) -> bool {
        self.status == "fixed-point"
    }
}

pub const THETA_EMPTY: &str = "Θ-empty";
pub const LEFT_BASIC: &str = "θ-left-basic";
pub const MINIMAL_LOST: &str = "minimal-element-lost";

/// One `[]psi` member together with the indices its clauses consult.
#[derive(Clone, Copy, Debug)]
struct BoxEntry {
    boxed: usize,
    inner: usize,
    neg_boxed: Option<usize>,
    neg_inner: Option<usize>,
}

/// Everything needed to evaluate, check and enumerate valuations over one
/// structure and universe.
pub struct Engine<'a> {
    s: &'a Structure,
    env: &'a SentenceEnv,
    u: &'a Universe,
    n_w: usize,
    n_j: usize,
    /// `neg[i]` = index of `~u[i]`
    neg: Vec<Option<usize>>,
    /// `negand[i]` = index of `psi` when `u[i] = ~psi`
    negand: Vec<Option<usize>>,
    tfree: Vec<bool>,
    /// conditional-free members (`[]` counts as atomic)
    frag: Vec<bool>,
    boxes: Vec<BoxEntry>,
    /// T-free members true in the plain structure, per cell
    ground: Vec<Bits>,
    provers: HashMap<Calculus, Prover<'a>>,
    limits: Limits,
    /// calculus of the condition currently being run
    cond_calc: Option<Calculus>,
    pub indeterminate: usize,
}

impl<'a> Engine<'a> {
    pub fn new(s: &'a Structure, env: &'a SentenceEnv, u: &'a Universe, limits: Limits) -> Engine<'a> {
        let n = u.len();
        let n_w = s.n_worlds();
        let n_j = s.n_interps();
        let neg: Vec<Option<usize>> = u.iter().map(|f| u.index_of(&Formula::not(f.clone()))).collect();
        let negand = u.iter().map(|f| f.negand().and_then(|g| u.index_of(g))).collect();
        let tfree: Vec<bool> = u.iter().map(|f| !f.has_truth()).collect();
        let frag = u.iter().map(|f| !f.has_conditional_or_would()).collect();
        let mut boxes = Vec::new();
        for (i, f) in u.iter().enumerate() {
            if let Kind::Box(a) = f.kind() {
                if let Some(inner) = u.index_of(a) {
                    boxes.push(BoxEntry {
                        boxed: i,
                        inner,
                        neg_boxed: neg[i],
                        neg_inner: neg[inner],
                    });
                }
            }
        }
        let ev = Evaluator::new(s, env);
        let mut ground = Vec::with_capacity(n_w * n_j);
        for j in 0..n_j {
            for w in 0..n_w {
                let mut b = Bits::new(n);
                for (i, f) in u.iter().enumerate() {
                    if tfree[i] && ev.holds(Point { w, j, m: None }, f) {
                        b.set(i);
                    }
                }
                ground.push(b);
            }
        }
        Engine {
            s,
            env,
            u,
            n_w,
            n_j,
            neg,
            negand,
            tfree,
            frag,
            boxes,
            ground,
            provers: HashMap::new(),
            limits,
            cond_calc: None,
            indeterminate: 0,
        }
    }

    pub fn structure(&self) -> &'a Structure {
        self.s
    }
    pub fn env(&self) -> &'a SentenceEnv {
        self.env
    }
    pub fn universe(&self) -> &'a Universe {
        self.u
    }
    pub fn empty(&self) -> Valuation {
        Valuation::empty(self.n_w, self.n_j, self.u.len())
    }

    fn cell_index(&self, w: usize, j: usize) -> usize {
        j * self.n_w + w
    }

    // ---- the Kleene jump ----

    fn den_sentence(&self, t: &Term) -> Option<Formula> {
        match crate::semantics::denote(self.s, self.env, 0, &Default::default(), t) {
            Ok(Den::Sentence(f)) => Some(f),
            _ => None,
        }
    }

    fn member(&self, g: &Valuation, w: usize, j: usize, f: &Formula) -> bool {
        self.u.index_of(f).is_some_and(|i| g.contains(w, j, i))
    }

    fn frame_succ(&self, w: usize) -> &[usize] {
        self.s.frame.as_ref().map_or(&[], |fr| fr.successors(w))
    }

    fn k_clause(&self, g: &Valuation, w: usize, j: usize, f: &Formula) -> bool {
        let consts = &self.env.constants;
        let ev = Evaluator::new(self.s, self.env);
        let p = Point { w, j, m: None };
        match f.kind() {
            Kind::Eq(..) | Kind::Atom(..) | Kind::Falsum => ev.holds(p, f),
            Kind::Truth(t) => self.den_sentence(t).is_some_and(|psi| self.member(g, w, j, &psi)),
            Kind::And(a, b) => self.member(g, w, j, a) && self.member(g, w, j, b),
            Kind::Forall(v, a) => consts.iter().all(|c| self.member(g, w, j, &a.subst(v, &Term::Const(c.clone())))),
            Kind::Box(a) => self.frame_succ(w).iter().all(|&v| self.member(g, v, j, a)),
            Kind::Imp(..) | Kind::Would(..) => false,
            Kind::Not(x) => match x.kind() {
                Kind::Eq(..) | Kind::Atom(..) | Kind::Falsum => ev.holds(p, f),
                Kind::Truth(t) => self.den_sentence(t).is_some_and(|psi| self.member(g, w, j, &Formula::not(psi))),
                Kind::Not(a) => self.member(g, w, j, a),
                Kind::And(a, b) => {
                    self.member(g, w, j, &Formula::not(a.clone())) || self.member(g, w, j, &Formula::not(b.clone()))
                }
                Kind::Forall(v, a) => consts
                    .iter()
                    .any(|c| self.member(g, w, j, &Formula::not(a.subst(v, &Term::Const(c.clone()))))),
                Kind::Box(a) => {
                    let na = Formula::not(a.clone());
                    self.frame_succ(w).iter().any(|&v| self.member(g, v, j, &na))
                }
                Kind::Imp(..) | Kind::Would(..) => false,
            },
        }
    }

    /// One application of the Kleene jump to `g`.
    pub fn kripke_jump(&self, g: &Valuation) -> Valuation {
        let mut out = self.empty();
        for j in 0..self.n_j {
            for w in 0..self.n_w {
                for (i, f) in self.u.iter().enumerate() {
                    if self.k_clause(g, w, j, f) {
                        out.insert(w, j, i);
                    }
                }
            }
        }
        out
    }

    /// Least fixed point of the jump, iterated from the empty valuation.
    pub fn minimal_k_fixpoint(&self) -> Valuation {
        let mut g = self.empty();
        loop {
            let next = self.kripke_jump(&g);
            if next == g {
                return g;
            }
            g = next;
        }
    }

    // ---- membership tests ----

    /// Consistency, ground soundness and H-monotonicity; the first failure.
    pub fn basic_violation(&self, v: &Valuation) -> Option<String> {
        for j in 0..self.n_j {
            for w in 0..self.n_w {
                let c = v.cell(w, j);
                for i in c.iter() {
                    if self.neg[i].is_some_and(|k| c.get(k)) {
                        return Some(format!("`{}` and its negation at {}", self.u.get(i), self.cell_name(w, j)));
                    }
                    if self.tfree[i] && !self.ground[self.cell_index(w, j)].get(i) {
                        return Some(format!("`{}` is not true at {}", self.u.get(i), self.cell_name(w, j)));
                    }
                }
            }
        }
        for &(a, b) in &self.s.h {
            for w in 0..self.n_w {
                if !v.cell(w, a).is_subset(v.cell(w, b)) {
                    return Some(format!(
                        "not monotone from {} to {}",
                        self.cell_name(w, a),
                        self.cell_name(w, b)
                    ));
                }
            }
        }
        None
    }

    pub fn is_basic(&self, v: &Valuation) -> bool {
        self.basic_violation(v).is_none()
    }

    pub fn cell_name(&self, w: usize, j: usize) -> String {
        let jn = &self.s.interps[j].name;
        match &self.s.frame {
            Some(fr) => format!("({},{})", fr.worlds[w], jn),
            None => jn.clone(),
        }
    }

    fn prover(&mut self, c: Calculus) -> &mut Prover<'a> {
        let (env, limits) = (self.env, self.limits);
        self.provers.entry(c).or_insert_with(|| Prover::new(c, true, env, limits))
    }

    /// Whether `inn => out` is provable (restricted to the fragment when
    /// `frag_only`). Budget exhaustion counts as "not refuted".
    fn refuted(&mut self, c: Calculus, frag_only: bool, inn: &Bits, out: &Bits) -> Outcome {
        let pick = |b: &Bits, frag: &[bool], u: &Universe| -> Vec<Formula> {
            b.iter().filter(|&i| !frag_only || frag[i]).map(|i| u.get(i).clone()).collect()
        };
        let gamma = pick(inn, &self.frag, self.u);
        let delta = pick(out, &self.frag, self.u);
        self.prover(c).decide(&gamma, &delta)
    }

    /// `cell` is saturated for calculus `c` over the universe (or its fragment).
    pub fn cell_saturated(&mut self, c: Calculus, frag_only: bool, cell: &Bits) -> Option<bool> {
        let mut out = Bits::new(self.u.len());
        for i in 0..self.u.len() {
            if !cell.get(i) {
                out.set(i);
            }
        }
        match self.refuted(c, frag_only, cell, &out) {
            Outcome::Proved(_) => Some(false),
            Outcome::NotProved => Some(true),
            Outcome::Unknown => None,
        }
    }

    fn all_cells_saturated(&mut self, c: Calculus, frag_only: bool, v: &Valuation) -> bool {
        for k in 0..v.cells.len() {
            match self.cell_saturated(c, frag_only, &v.cells[k]) {
                Some(true) => {}
                Some(false) => return false,
                None => {
                    self.indeterminate += 1;
                    return false;
                }
            }
        }
        true
    }

    fn box_violation(&self, v: &Valuation) -> Option<String> {
        for j in 0..self.n_j {
            for w in 0..self.n_w {
                if let Some(msg) = self.box_violation_at(w, j, &|x: usize, i: usize| v.contains(x, j, i)) {
                    return Some(msg);
                }
            }
        }
        None
    }

    fn box_violation_at(&self, w: usize, j: usize, has: &dyn Fn(usize, usize) -> bool) -> Option<String> {
        let succ = self.frame_succ(w);
        for b in &self.boxes {
            let want = succ.iter().all(|&v| has(v, b.inner));
            if has(w, b.boxed) != want {
                return Some(format!("`{}` at {} disagrees with its successors", self.u.get(b.boxed), self.cell_name(w, j)));
            }
            if let Some(nb) = b.neg_boxed {
                let want = b.neg_inner.is_some_and(|ni| succ.iter().any(|&v| has(v, ni)));
                if has(w, nb) != want {
                    return Some(format!("`{}` at {} disagrees with its successors", self.u.get(nb), self.cell_name(w, j)));
                }
            }
        }
        None
    }

    /// Basic, K3-saturated, K3T-saturated on the conditional-free members,
    /// and (with a frame) box-fixed.
    pub fn bt_violation(&mut self, v: &Valuation) -> Option<String> {
        if let Some(m) = self.basic_violation(v) {
            return Some(m);
        }
        if !self.all_cells_saturated(Calculus::K3, false, v) {
            return Some("not K3-saturated".into());
        }
        if !self.all_cells_saturated(Calculus::K3T, true, v) {
            return Some("conditional-free part not K3T-saturated".into());
        }
        self.box_violation(v)
    }

    /// Saturation demanded by `cond` (no demand for `c`).
    pub fn meets(&mut self, cond: Cond, v: &Valuation) -> bool {
        match cond.calculus() {
            None => true,
            Some(c) => self.all_cells_saturated(c, false, v),
        }
    }

    // ---- enumeration ----

    /// Every valuation in the start range that is above `lower` and meets
    /// `cond`, sorted by size and then contents.
    pub fn admissible_above(&mut self, cond: Cond, lower: &Valuation, cap: usize) -> Result<Vec<Valuation>, TruthError> {
        let mut per_cell: Vec<Vec<Bits>> = Vec::with_capacity(self.n_w * self.n_j);
        for j in 0..self.n_j {
            for w in 0..self.n_w {
                let found = self.cell_candidates(cond, w, j, lower.cell(w, j), cap)?;
                per_cell.push(found);
            }
        }
        // worlds within each interpretation, then interpretations
        let mut per_j: Vec<Vec<Vec<Bits>>> = Vec::with_capacity(self.n_j);
        for j in 0..self.n_j {
            let mut acc: Vec<Vec<Bits>> = Vec::new();
            let mut cur = Vec::with_capacity(self.n_w);
            self.combine_worlds(j, &per_cell, &mut cur, &mut acc, cap)?;
            per_j.push(acc);
        }
        let mut out = Vec::new();
        let mut cur: Vec<&Vec<Bits>> = Vec::with_capacity(self.n_j);
        self.combine_interps(&per_j, &mut cur, &mut out, cap)?;
        out.sort_by(|a: &Valuation, b: &Valuation| a.size().cmp(&b.size()).then_with(|| a.cmp(b)));
        Ok(out)
    }

    fn combine_worlds(
        &self,
        j: usize,
        per_cell: &[Vec<Bits>],
        cur: &mut Vec<Bits>,
        acc: &mut Vec<Vec<Bits>>,
        cap: usize,
    ) -> Result<(), TruthError> {
        let w = cur.len();
        if w == self.n_w {
            let ok = (0..self.n_w).all(|x| self.box_violation_at(x, j, &|y: usize, i: usize| cur[y].get(i)).is_none());
            if ok {
                if acc.len() >= cap {
                    return Err(TruthError::FamilyTooLarge { cap });
                }
                acc.push(cur.clone());
            }
            return Ok(());
        }
        for b in &per_cell[self.cell_index(w, j)] {
            cur.push(b.clone());
            self.combine_worlds(j, per_cell, cur, acc, cap)?;
            cur.pop();
        }
        Ok(())
    }

    fn combine_interps<'v>(
        &self,
        per_j: &'v [Vec<Vec<Bits>>],
        cur: &mut Vec<&'v Vec<Bits>>,
        out: &mut Vec<Valuation>,
        cap: usize,
    ) -> Result<(), TruthError> {
        let j = cur.len();
        if j == self.n_j {
            let mut v = self.empty();
            for (jj, cells) in cur.iter().enumerate() {
                for (w, b) in cells.iter().enumerate() {
                    *v.cell_mut(w, jj) = b.clone();
                }
            }
            if out.len() >= cap {
                return Err(TruthError::FamilyTooLarge { cap });
            }
            out.push(v);
            return Ok(());
        }
        for cand in &per_j[j] {
            let mono = self.s.h.iter().all(|&(a, b)| {
                let (x, y) = match (a == j, b == j) {
                    (true, false) if b < j => (cand, cur[b]),
                    (false, true) if a < j => (cur[a], cand),
                    _ => return true,
                };
                x.iter().zip(y).all(|(p, q)| p.is_subset(q))
            });
            if mono {
                cur.push(cand);
                self.combine_interps(per_j, cur, out, cap)?;
                cur.pop();
            }
        }
        Ok(())
    }

    /// Depth-first search over membership decisions in universe order,
    /// pruned whenever a relevant calculus proves IN => OUT.
    fn cell_candidates(&mut self, cond: Cond, w: usize, j: usize, lower: &Bits, cap: usize) -> Result<Vec<Bits>, TruthError> {
        let n = self.u.len();
        let ground = self.ground[self.cell_index(w, j)].clone();
        let mut inn = Bits::new(n);
        let mut out = Bits::new(n);
        for i in 0..n {
            if lower.get(i) {
                inn.set(i);
            } else if self.tfree[i] && !ground.get(i) {
                out.set(i);
            }
        }
        // the lower bound itself may already be contradictory
        for i in inn.iter() {
            if out.get(i) || self.neg[i].is_some_and(|k| inn.get(k)) {
                return Ok(Vec::new());
            }
        }
        let mut found = Vec::new();
        if !self.feasible(cond, &inn, &out, None) {
            return Ok(found);
        }
        self.dfs(cond, 0, &mut inn, &mut out, &mut found, cap)?;
        Ok(found)
    }

    fn feasible(&mut self, cond: Cond, inn: &Bits, out: &Bits, touched: Option<usize>) -> bool {
        let mut checks: Vec<(Calculus, bool)> = vec![(Calculus::K3, false)];
        if touched.is_none_or(|i| self.frag[i]) {
            checks.push((Calculus::K3T, true));
        }
        if let Some(c) = cond.calculus() {
            if c != Calculus::K3 {
                checks.push((c, false));
            }
        }
        for (c, frag_only) in checks {
            match self.refuted(c, frag_only, inn, out) {
                Outcome::Proved(_) => return false,
                Outcome::NotProved => {}
                Outcome::Unknown => {
                    // cannot prune; a complete assignment with an unknown
                    // verdict is dropped in `dfs`
                    if inn.count() + out.count() == self.u.len() {
                        self.indeterminate += 1;
                        return false;
                    }
                }
            }
        }
        true
    }

    fn dfs(
        &mut self,
        cond: Cond,
        start: usize,
        inn: &mut Bits,
        out: &mut Bits,
        found: &mut Vec<Bits>,
        cap: usize,
    ) -> Result<(), TruthError> {
        let n = self.u.len();
        let mut i = start;
        while i < n && (inn.get(i) || out.get(i)) {
            i += 1;
        }
        if i == n {
            if found.len() >= cap {
                return Err(TruthError::FamilyTooLarge { cap });
            }
            found.push(inn.clone());
            return Ok(());
        }
        let clash = self.neg[i].is_some_and(|k| inn.get(k)) || self.negand[i].is_some_and(|k| inn.get(k));
        if !clash {
            inn.set(i);
            if self.feasible(cond, inn, out, Some(i)) {
                self.dfs(cond, i + 1, inn, out, found, cap)?;
            }
            inn.unset(i);
        }
        out.set(i);
        if self.feasible(cond, inn, out, Some(i)) {
            self.dfs(cond, i + 1, inn, out, found, cap)?;
        }
        out.unset(i);
        Ok(())
    }

    // ---- theta ----

    /// Everything true at `J_m` (each cell), inside family `fam`.
    pub fn theta(&self, fam: &Family<'_>, m: usize) -> Valuation {
        let ev = Evaluator::with_truth(self.s, self.env, Some(fam));
        self.theta_with(&ev, m)
    }

    fn theta_with(&self, ev: &Evaluator<'_>, m: usize) -> Valuation {
        let mut out = self.empty();
        for j in 0..self.n_j {
            for w in 0..self.n_w {
                for (i, f) in self.u.iter().enumerate() {
                    if ev.holds(Point { w, j, m: Some(m) }, f) {
                        out.insert(w, j, i);
                    }
                }
            }
        }
        out
    }

    /// Members of `fam` above `bound`.
    pub fn big_theta(&self, fam: &Family<'_>, bound: &Valuation) -> Vec<usize> {
        (0..fam.len()).filter(|&k| bound.leq(&fam.members[k])).collect()
    }

    /// Family with `f` first followed by the pool members above it.
    fn stage_family(&self, pool: &[Valuation], f: &Valuation, f_admissible: bool) -> Family<'a> {
        let mut members = vec![f.clone()];
        let mut adm = vec![f_admissible];
        for g in pool {
            if g != f && f.leq(g) {
                members.push(g.clone());
                adm.push(true);
            }
        }
        let basic = vec![true; members.len()];
        Family::new(self.u, members, basic, adm)
    }

    /// Runs the iteration from the minimal Kleene fixed point with every
    /// admissible valuation above it as the pool.
    pub fn run(&mut self, cond: Cond, opts: &RunOptions) -> Result<FixedPointResult, TruthError> {
        let f0 = self.minimal_k_fixpoint();
        if let Some(why) = self.bt_violation(&f0) {
            return Ok(self.collapse(cond, 0, MINIMAL_LOST, format!("start valuation rejected: {}", why), f0, vec![]));
        }
        let pool = self.admissible_above(cond, &f0, opts.max_family)?;
        self.iterate(cond, f0, pool)
    }

    fn collapse(
        &self,
        cond: Cond,
        stage: usize,
        reason: &str,
        detail: String,
        g: Valuation,
        stages: Vec<StageRecord>,
    ) -> FixedPointResult {
        FixedPointResult {
            cond: cond.name().into(),
            status: "collapse".into(),
            stage,
            reason: Some(reason.into()),
            detail: Some(detail),
            valuation: self.records(&g),
            family_size: 0,
            stages,
            verification: None,
            indeterminate: self.indeterminate,
            g,
            z: vec![],
        }
    }

    pub fn records(&self, v: &Valuation) -> Vec<CellRecord> {
        let mut out = Vec::new();
        for j in 0..self.n_j {
            for w in 0..self.n_w {
                out.push(CellRecord {
                    world: self.s.frame.as_ref().map_or_else(String::new, |fr| fr.worlds[w].clone()),
                    interp: self.s.interps[j].name.clone(),
                    sentences: v.sentences(self.u, w, j).iter().map(|f| f.to_string()).collect(),
                });
            }
        }
        out
    }

    /// Rebuilds a valuation from its records (inverse of [`Engine::records`]).
    pub fn from_records(&self, recs: &[CellRecord]) -> Result<Valuation, TruthError> {
        let mut v = self.empty();
        if recs.len() != self.n_w * self.n_j {
            return Err(TruthError::Input(format!("expected {} cells, found {}", self.n_w * self.n_j, recs.len())));
        }
        for r in recs {
            let j = self.s.interps.iter().position(|x| x.name == r.interp);
            let w = match &self.s.frame {
                Some(fr) => fr.index_of(&r.world),
                None => Some(0),
            };
            let (Some(w), Some(j)) = (w, j) else {
                return Err(TruthError::Input(format!("unknown cell ({},{})", r.world, r.interp)));
            };
            for text in &r.sentences {
                let f = crate::syntax::parse_formula(text, self.env).map_err(|e| TruthError::Input(e.to_string()))?;
                let f = self.env.canonical(&f);
                let i = self
                    .u
                    .index_of(&f)
                    .ok_or_else(|| TruthError::Input(format!("`{}` is not in the universe", text)))?;
                v.insert(w, j, i);
            }
        }
        Ok(v)
    }

    /// The theta/Theta alternation from `f0` over `pool` (every pool member
    /// is taken to meet the condition).
    pub fn iterate(&mut self, cond: Cond, f0: Valuation, pool: Vec<Valuation>) -> Result<FixedPointResult, TruthError> {
        self.cond_calc = cond.calculus();
        let max_stages = self.u.len() * self.n_w * self.n_j + 2;
        let mut f = f0.clone();
        let mut stages = Vec::new();
        let mut prev: Option<Valuation> = None;
        for stage in 0..=max_stages {
            let f_adm = self.meets(cond, &f);
            let fam = self.stage_family(&pool, &f, f_adm);
            let above = fam.successors(0).len();
            stages.push(StageRecord { stage, size: f.size(), admissible: above });
            if above == 0 {
                let detail = self.empty_detail(&pool, prev.as_ref(), &f);
                return Ok(self.collapse(cond, stage, THETA_EMPTY, detail, f, stages));
            }
            let next = self.theta(&fam, 0);
            if let Some(why) = self.basic_violation(&next) {
                return Ok(self.collapse(cond, stage, LEFT_BASIC, why, f, stages));
            }
            if !f.leq(&next) {
                return Ok(self.collapse(cond, stage, MINIMAL_LOST, "θ(f) is not above f".into(), f, stages));
            }
            if !f0.leq(&next) {
                return Ok(self.collapse(cond, stage, MINIMAL_LOST, "θ(f) left the start range".into(), f, stages));
            }
            if let Some(why) = self.bt_violation(&next) {
                return Ok(self.collapse(cond, stage, MINIMAL_LOST, format!("θ(f) left the start range: {}", why), f, stages));
            }
            if next == f {
                // one more application of each operator on the final family
                let again = self.theta(&fam, 0);
                let kept = self.big_theta(&fam, &again);
                let verification = Verification {
                    theta_fixes_g: again == f,
                    big_theta_fixes_z: kept.len() == fam.len(),
                };
                return Ok(FixedPointResult {
                    cond: cond.name().into(),
                    status: "fixed-point".into(),
                    stage,
                    reason: None,
                    detail: None,
                    valuation: self.records(&f),
                    family_size: fam.len(),
                    stages,
                    verification: Some(verification),
                    indeterminate: self.indeterminate,
                    z: fam.members.clone(),
                    g: f,
                });
            }
            prev = Some(f);
            f = next;
        }
        Err(TruthError::Input(format!("no stabilization within {} stages", max_stages)))
    }

    /// Explains an empty admissible range by a witness: a member added by
    /// the last theta step that no admissible valuation above the previous
    /// stage contains.
    fn empty_detail(&mut self, pool: &[Valuation], prev: Option<&Valuation>, f: &Valuation) -> String {
        let Some(p) = prev else {
            return self.start_detail(f).unwrap_or_else(|| "no admissible valuation above the start valuation".into());
        };
        let above: Vec<&Valuation> = pool.iter().filter(|g| p.leq(g)).collect();
        for j in 0..self.n_j {
            for w in 0..self.n_w {
                for i in f.cell(w, j).iter() {
                    if p.contains(w, j, i) || above.iter().any(|g| g.contains(w, j, i)) {
                        continue;
                    }
                    let name = self.env.name_of(self.u.get(i)).map_or_else(|| self.u.get(i).to_string(), |n| n.to_string());
                    let at = self.cell_name(w, j);
                    return format!(
                        "witness `{name}` at {at}: either it is in f({at}) or not. \
                         If it is, f has no admissible extension, since none of the {} admissible valuations above the \
                         previous stage contains it. If it is not, θ adds it anyway, so no admissible valuation extends θ(f).",
                        above.len()
                    );
                }
            }
        }
        "θ(f) has no admissible extension".into()
    }

    /// Stage-0 witness: a sentence outside `f` that the condition's calculus
    /// derives from `f` and that, once added, derives a sentence no basic
    /// valuation may contain.
    fn start_detail(&mut self, f: &Valuation) -> Option<String> {
        let c = self.cond_calc?;
        for j in 0..self.n_j {
            for w in 0..self.n_w {
                let cell = f.cell(w, j).clone();
                let gamma: Vec<Formula> = cell.iter().map(|i| self.u.get(i).clone()).collect();
                let mut excluded: Vec<Formula> = (0..self.u.len())
                    .filter(|&i| self.tfree[i] && !self.ground[self.cell_index(w, j)].get(i))
                    .map(|i| self.u.get(i).clone())
                    .collect();
                excluded.sort_by_key(|x| !matches!(x.kind(), Kind::Falsum));
                // named sentences first: they make the most readable witnesses
                let mut order: Vec<usize> = (0..self.u.len()).collect();
                order.sort_by_key(|&i| self.env.name_of(self.u.get(i)).is_none());
                for i in order {
                    if cell.get(i) || self.tfree[i] {
                        continue;
                    }
                    let phi = self.u.get(i).clone();
                    if !self.prover(c).decide(&gamma, std::slice::from_ref(&phi)).is_proved() {
                        continue;
                    }
                    let mut g2 = gamma.clone();
                    g2.push(phi.clone());
                    let bad = excluded.iter().find(|x| self.prover(c).decide(&g2, std::slice::from_ref(x)).is_proved());
                    let Some(bad) = bad.cloned() else { continue };
                    let name = self.env.name_of(&phi).map_or_else(|| phi.to_string(), |n| n.to_string());
                    let at = self.cell_name(w, j);
                    return Some(format!(
                        "witness `{name}` at {at}: either it is in f({at}) or it is not. If it is, f({at}) together with it \
                         derives `{bad}`, which no basic valuation contains. If it is not, f({at}) => {name} is derivable in {c}, \
                         so every admissible valuation above f contains `{name}` and derives `{bad}` again. \
                         Either way no admissible valuation extends f."
                    ));
                }
            }
        }
        None
    }

    // ---- diagnostics at a fixed point ----

    /// Family `Z_g` rebuilt from a result (g first, admissibility flags
    /// recomputed).
    pub fn result_family(&mut self, cond: Cond, r: &FixedPointResult) -> Family<'a> {
        let g_adm = self.meets(cond, &r.g);
        self.stage_family(&r.z, &r.g, g_adm)
    }

    /// `g` followed by every admissible valuation above it.
    pub fn family_at(&mut self, cond: Cond, g: &Valuation, cap: usize) -> Result<Family<'a>, TruthError> {
        let pool = self.admissible_above(cond, g, cap)?;
        let adm = self.meets(cond, g);
        Ok(self.stage_family(&pool, g, adm))
    }

    /// Searches the admissible valuations above `lower` for one putting
    /// `phi` into some cell. Returns it with the (world, interpretation).
    pub fn find_admissible_with(
        &mut self,
        cond: Cond,
        lower: &Valuation,
        phi: &Formula,
        cap: usize,
    ) -> Result<Option<(Valuation, usize, usize)>, TruthError> {
        let Some(i) = self.u.index_of(&self.env.canonical(phi)) else {
            return Err(TruthError::Input(format!("`{}` is not in the universe", phi)));
        };
        for g in self.admissible_above(cond, lower, cap)? {
            for j in 0..self.n_j {
                for w in 0..self.n_w {
                    if g.contains(w, j, i) {
                        return Ok(Some((g, w, j)));
                    }
                }
            }
        }
        Ok(None)
    }

    /// The generated substructure: members `k` with `g <=_cond k`.
    pub fn generated_substructure(&self, fam: &Family<'a>) -> Kss<'a> {
        let retained: Vec<usize> = fam.successors(0).to_vec();
        let f_retained = retained.contains(&0);
        let sub = fam.restrict(&retained);
        let reflexive = (0..sub.len()).all(|k| sub.successors(k).contains(&k));
        // theta at g over the restriction (g added back when it was dropped)
        let mut with_g = vec![0];
        with_g.extend(retained.iter().copied().filter(|&k| k != 0));
        let theta_fixed = self.theta(&fam.restrict(&with_g), 0) == fam.members[0];
        Kss { sub, f_retained, reflexive, theta_fixed }
    }

    /// Naivety at the first member of `fam`: for each member and cell,
    /// `phi` and `T'phi'` agree, and so do `~phi` and `~T'phi'`.
    pub fn check_naivety(&self, fam: &Family<'_>) -> Vec<String> {
        let ev = Evaluator::with_truth(self.s, self.env, Some(fam));
        let mut out = Vec::new();
        for j in 0..self.n_j {
            for w in 0..self.n_w {
                let p = Point { w, j, m: Some(0) };
                for f in self.u.iter() {
                    let t = Formula::truth(self.env.quote(f));
                    if ev.holds(p, f) != ev.holds(p, &t) {
                        out.push(format!("{} at {}: truth of sentence and truth atom differ", f, self.cell_name(w, j)));
                    }
                    // `~T'phi'` reads membership of `~phi`, so chain tops are skipped
                    let nf = Formula::not(f.clone());
                    if self.u.contains(&nf) && ev.holds(p, &nf) != ev.holds(p, &Formula::not(t)) {
                        out.push(format!("{} at {}: falsity of sentence and truth atom differ", f, self.cell_name(w, j)));
                    }
                }
            }
        }
        out
    }

    /// Instances of the eleven principles over the universe.
    pub fn principle_instances(&self) -> Vec<(char, Formula)> {
        let u = self.u;
        let t = |f: &Formula| Formula::truth(self.env.quote(f));
        let has = |f: &Formula| u.contains(f);
        let not = |f: &Formula| Formula::not(f.clone());
        let mut out = Vec::new();
        for phi in u.iter() {
            let nphi = not(phi);
            if has(&nphi) {
                out.push(('a', Formula::imp(Formula::and(t(phi), t(&nphi)), Formula::falsum())));
                out.push(('b', Formula::iff(t(&nphi), not(&t(phi)))));
                if has(&not(&nphi)) {
                    out.push(('c', Formula::iff(t(&not(&nphi)), t(phi))));
                }
            }
            match phi.kind() {
                Kind::And(a, b) => {
                    out.push(('d', Formula::iff(t(phi), Formula::and(t(a), t(b)))));
                    if has(&nphi) && has(&not(a)) && has(&not(b)) {
                        out.push(('e', Formula::iff(t(&nphi), Formula::or(t(&not(a)), t(&not(b))))));
                    }
                }
                Kind::Forall(v, a) if !self.env.constants.is_empty() => {
                    let inst: Vec<Formula> = self.env.constants.iter().map(|c| a.subst(v, &Term::Const(c.clone()))).collect();
                    if inst.iter().all(has) {
                        let all = Formula::conj(&inst.iter().map(t).collect::<Vec<_>>());
                        out.push(('f', Formula::imp(t(phi), all.clone())));
                        if has(&nphi) {
                            out.push(('g', Formula::imp(Formula::not(all), t(&nphi))));
                        }
                    }
                }
                Kind::Imp(a, b) => {
                    out.push(('h', Formula::imp(Formula::and(t(phi), t(a)), t(b))));
                    if has(&nphi) && has(&not(b)) {
                        out.push(('i', Formula::iff(t(&nphi), Formula::and(t(a), t(&not(b))))));
                    }
                }
                _ => {}
            }
            let tphi = t(phi);
            if has(&tphi) {
                out.push(('j', Formula::iff(t(&tphi), tphi.clone())));
                let ntphi = not(&tphi);
                if has(&ntphi) && has(&nphi) {
                    out.push(('k', Formula::iff(t(&ntphi), t(&nphi))));
                }
            }
        }
        out
    }

    /// Evaluates every instance at every member of `sub` (all cells).
    pub fn check_principles(&self, cond: Cond, sub: &Family<'_>) -> Vec<PrincipleReport> {
        let ev = Evaluator::with_truth(self.s, self.env, Some(sub));
        let insts = self.principle_instances();
        let mut out = Vec::new();
        for p in 'a'..='k' {
            let mut rep = PrincipleReport {
                principle: p.to_string(),
                asserted: principle_asserted(cond, p),
                instances: 0,
                violations: Vec::new(),
            };
            for (_, f) in insts.iter().filter(|(q, _)| *q == p) {
                rep.instances += 1;
                'pts: for m in 0..sub.len() {
                    for j in 0..self.n_j {
                        for w in 0..self.n_w {
                            if !ev.holds(Point { w, j, m: Some(m) }, f) {
                                rep.violations.push(format!("{} fails at {} (member {})", f, self.cell_name(w, j), m));
                                break 'pts;
                            }
                        }
                    }
                }
            }
            out.push(rep);
        }
        out
    }

    /// Both sides of the global deduction theorem over every point of `sub`:
    /// (all of gamma, phi true => psi true) and (all of gamma true =>
    /// phi -> psi true).
    pub fn deduction_theorem(&self, sub: &Family<'_>, gamma: &[Formula], phi: &Formula, psi: &Formula) -> (bool, bool) {
        let ev = Evaluator::with_truth(self.s, self.env, Some(sub));
        let imp = Formula::imp(phi.clone(), psi.clone());
        let (mut left, mut right) = (true, true);
        for m in 0..sub.len() {
            for j in 0..self.n_j {
                for w in 0..self.n_w {
                    let p = Point { w, j, m: Some(m) };
                    let g = gamma.iter().all(|x| ev.holds(p, x));
                    if g && ev.holds(p, phi) && !ev.holds(p, psi) {
                        left = false;
                    }
                    if g && !ev.holds(p, &imp) {
                        right = false;
                    }
                }
            }
        }
        (left, right)
    }

    /// Truth value of a sentence at `(w, j)` with member `m` of `fam`.
    pub fn holds_at(&self, fam: &Family<'_>, m: usize, w: usize, j: usize, f: &Formula) -> bool {
        Evaluator::with_truth(self.s, self.env, Some(fam)).holds(Point { w, j, m: Some(m) }, f)
    }
}

/// Output of [`Engine::generated_substructure`].
pub struct Kss<'u> {
    pub sub: Family<'u>,
    pub f_retained: bool,
    pub reflexive: bool,
    pub theta_fixed: bool,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct PrincipleReport {
    pub principle: String,
    pub asserted: bool,
    pub instances: usize,
    pub violations: Vec<String>,
}

/// Which principles are expected to hold under which condition.
pub fn principle_asserted(cond: Cond, p: char) -> bool {
    match p {
        'a'..='g' => matches!(cond, Cond::K3 | Cond::N3 | Cond::Nve),
        'h' | 'i' => cond == Cond::N3,
        'j' | 'k' => cond == Cond::Nve,
        _ => false,
    }
}

/// Convenience entry: builds an engine and runs the default iteration.
pub fn iterate_fixed_point(
    s: &Structure,
    env: &SentenceEnv,
    universe: &Universe,
    cond: Cond,
    opts: &RunOptions,
) -> Result<FixedPointResult, TruthError> {
    let bad = crate::semantics::validate_structure(s, env);
    if let Some(v) = bad.first() {
        return Err(TruthError::Input(format!("invalid structure: {}", v)));
    }
    if let Some(fr) = &s.frame {
        if let Some(v) = crate::modal::validate_frame(fr).first() {
            return Err(TruthError::Input(format!("invalid frame: {}", v)));
        }
    }
    Engine::new(s, env, universe, opts.limits).run(cond, opts)
}
