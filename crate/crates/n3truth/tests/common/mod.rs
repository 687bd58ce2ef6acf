//! Shared helpers for the integration tests: a random structure generator
//! with its own plain representation, a sentence generator, and the
//! recursive reference evaluators used as oracles.
#![allow(dead_code)]

pub mod frames;
pub mod replay;
pub mod toys;

use n3truth::model::Model;
use n3truth::syntax::{parse_formula, Formula};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;

pub fn models_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../models")
}

pub fn corpus(name: &str) -> Model {
    Model::load(&models_dir().join(format!("{name}.model"))).expect("corpus model loads")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

/// Three-valued atom status: 1 true, -1 false, 0 gap.
pub type V = i8;

/// One partial interpretation over `P/1`, `Q/1` and `R/2`.
#[derive(Clone, Debug, PartialEq)]
pub struct Pi {
    pub p: Vec<V>,
    pub q: Vec<V>,
    pub r: Vec<V>, // n*n, row major
}

impl Pi {
    fn below(&self, o: &Pi) -> bool {
        let le = |a: &[V], b: &[V]| a.iter().zip(b).all(|(&x, &y)| x == 0 || x == y);
        le(&self.p, &o.p) && le(&self.q, &o.q) && le(&self.r, &o.r)
    }
}

/// A small supervaluation structure: elements `c0..`, one constant each.
#[derive(Clone, Debug)]
pub struct Toy {
    pub n: usize,
    pub interps: Vec<Pi>,
    pub h: Vec<(usize, usize)>,
}

fn random_status(rng: &mut ChaCha8Rng, density: f64) -> V {
    if rng.gen_bool(density) {
        if rng.gen_bool(0.5) {
            1
        } else {
            -1
        }
    } else {
        0
    }
}

impl Toy {
    /// 1..=3 elements, 1..=4 interpretations. Later interpretations often
    /// refine an earlier one so H has non-trivial pairs; H is a random
    /// transitive sub-relation of the information order.
    pub fn random(rng: &mut ChaCha8Rng) -> Toy {
        let n = rng.gen_range(1..=3);
        let k = rng.gen_range(1..=4);
        let mut interps: Vec<Pi> = Vec::new();
        for i in 0..k {
            let fresh = |rng: &mut ChaCha8Rng, d: f64| Pi {
                p: (0..n).map(|_| random_status(rng, d)).collect(),
                q: (0..n).map(|_| random_status(rng, d)).collect(),
                r: (0..n * n).map(|_| random_status(rng, d)).collect(),
            };
            if i > 0 && rng.gen_bool(0.7) {
                let mut c = interps[rng.gen_range(0..i)].clone();
                for v in c.p.iter_mut().chain(c.q.iter_mut()).chain(c.r.iter_mut()) {
                    if *v == 0 {
                        *v = random_status(rng, 0.4);
                    }
                }
                interps.push(c);
            } else {
                interps.push(fresh(rng, 0.4));
            }
        }
        let mut rel = vec![vec![false; k]; k];
        for a in 0..k {
            for b in 0..k {
                rel[a][b] = a == b || (interps[a].below(&interps[b]) && rng.gen_bool(0.7));
            }
        }
        for m in 0..k {
            for a in 0..k {
                for b in 0..k {
                    if rel[a][m] && rel[m][b] {
                        rel[a][b] = true;
                    }
                }
            }
        }
        let mut h = Vec::new();
        for a in 0..k {
            for b in 0..k {
                if rel[a][b] {
                    h.push((a, b));
                }
            }
        }
        Toy { n, interps, h }
    }

    pub fn successors(&self, j: usize) -> Vec<usize> {
        self.h.iter().filter(|p| p.0 == j).map(|p| p.1).collect()
    }

    pub fn model_text(&self) -> String {
        let mut s = String::from("predicate P/1 Q/1 R/2\nconstant");
        for e in 0..self.n {
            s.push_str(&format!(" c{e}"));
        }
        s.push('\n');
        for (j, i) in self.interps.iter().enumerate() {
            s.push_str(&format!("interp J{j}\n"));
            let sign = |v: V| if v > 0 { "+" } else { "-" };
            for e in 0..self.n {
                if i.p[e] != 0 {
                    s.push_str(&format!("{} P(c{e})\n", sign(i.p[e])));
                }
                if i.q[e] != 0 {
                    s.push_str(&format!("{} Q(c{e})\n", sign(i.q[e])));
                }
                for d in 0..self.n {
                    let v = i.r[e * self.n + d];
                    if v != 0 {
                        s.push_str(&format!("{} R(c{e}, c{d})\n", sign(v)));
                    }
                }
            }
        }
        for &(a, b) in &self.h {
            s.push_str(&format!("h J{a} J{b}\n"));
        }
        s
    }

    pub fn model(&self) -> Model {
        Model::parse(&self.model_text()).expect("generated model parses")
    }
}

/// Oracle syntax; variables are de Bruijn-free names `x0`, `x1`, ...
#[derive(Clone, Debug, PartialEq)]
pub enum Tm {
    C(usize),
    X(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Sk {
    P(Tm),
    Q(Tm),
    R(Tm, Tm),
    Eq(Tm, Tm),
    Bot,
    Not(Box<Sk>),
    And(Box<Sk>, Box<Sk>),
    Or(Box<Sk>, Box<Sk>),
    Imp(Box<Sk>, Box<Sk>),
    All(usize, Box<Sk>),
    Ex(usize, Box<Sk>),
}

fn tm(t: &Tm) -> String {
    match t {
        Tm::C(c) => format!("c{c}"),
        Tm::X(x) => format!("x{x}"),
    }
}

impl Sk {
    pub fn text(&self) -> String {
        match self {
            Sk::P(a) => format!("P({})", tm(a)),
            Sk::Q(a) => format!("Q({})", tm(a)),
            Sk::R(a, b) => format!("R({}, {})", tm(a), tm(b)),
            Sk::Eq(a, b) => format!("({} = {})", tm(a), tm(b)),
            Sk::Bot => "false".into(),
            Sk::Not(a) => format!("~{}", a.text()),
            Sk::And(a, b) => format!("({} & {})", a.text(), b.text()),
            Sk::Or(a, b) => format!("({} | {})", a.text(), b.text()),
            Sk::Imp(a, b) => format!("({} -> {})", a.text(), b.text()),
            Sk::All(x, a) => format!("(A x{x} {})", a.text()),
            Sk::Ex(x, a) => format!("(E x{x} {})", a.text()),
        }
    }

    pub fn has_imp(&self) -> bool {
        match self {
            Sk::Imp(..) => true,
            Sk::Not(a) | Sk::All(_, a) | Sk::Ex(_, a) => a.has_imp(),
            Sk::And(a, b) | Sk::Or(a, b) => a.has_imp() || b.has_imp(),
            _ => false,
        }
    }

    pub fn formula(&self, m: &Model) -> Formula {
        parse_formula(&self.text(), &m.env).unwrap_or_else(|e| panic!("{}: {e}", self.text()))
    }
}

/// Random closed sentence over elements `0..n`.
pub fn random_sentence(rng: &mut ChaCha8Rng, n: usize, depth: u32, conditionals: bool) -> Sk {
    gen(rng, n, depth, conditionals, 0)
}

fn gen_tm(rng: &mut ChaCha8Rng, n: usize, bound: usize) -> Tm {
    if bound > 0 && rng.gen_bool(0.6) {
        Tm::X(rng.gen_range(0..bound))
    } else {
        Tm::C(rng.gen_range(0..n))
    }
}

fn gen(rng: &mut ChaCha8Rng, n: usize, depth: u32, cond: bool, bound: usize) -> Sk {
    if depth == 0 || rng.gen_bool(0.25) {
        return match rng.gen_range(0..10) {
            0..=3 => Sk::P(gen_tm(rng, n, bound)),
            4..=5 => Sk::Q(gen_tm(rng, n, bound)),
            6..=7 => Sk::R(gen_tm(rng, n, bound), gen_tm(rng, n, bound)),
            8 => Sk::Eq(gen_tm(rng, n, bound), gen_tm(rng, n, bound)),
            _ => Sk::Bot,
        };
    }
    let d = depth - 1;
    let top = if cond { 7 } else { 6 };
    match rng.gen_range(0..top) {
        0 => Sk::Not(Box::new(gen(rng, n, d, cond, bound))),
        1 => Sk::And(Box::new(gen(rng, n, d, cond, bound)), Box::new(gen(rng, n, d, cond, bound))),
        2 => Sk::Or(Box::new(gen(rng, n, d, cond, bound)), Box::new(gen(rng, n, d, cond, bound))),
        3 if bound < 2 => Sk::All(bound, Box::new(gen(rng, n, d, cond, bound + 1))),
        4 if bound < 2 => Sk::Ex(bound, Box::new(gen(rng, n, d, cond, bound + 1))),
        6 => Sk::Imp(Box::new(gen(rng, n, d, cond, bound)), Box::new(gen(rng, n, d, cond, bound))),
        _ => Sk::Not(Box::new(gen(rng, n, d, cond, bound))),
    }
}

fn den(t: &Tm, env: &[usize]) -> usize {
    match t {
        Tm::C(c) => *c,
        Tm::X(x) => env[*x],
    }
}

/// Recursive strong Kleene table evaluation at interpretation `j`. A
/// conditional is evaluated through the H successors (truth) and locally
/// (falsity), which is the only place the oracle looks beyond `j`.
pub fn oracle(toy: &Toy, j: usize, f: &Sk) -> V {
    let mut env = vec![0; 2];
    ev(toy, j, f, &mut env)
}

fn ev(toy: &Toy, j: usize, f: &Sk, env: &mut Vec<usize>) -> V {
    let i = &toy.interps[j];
    match f {
        Sk::P(a) => i.p[den(a, env)],
        Sk::Q(a) => i.q[den(a, env)],
        Sk::R(a, b) => i.r[den(a, env) * toy.n + den(b, env)],
        Sk::Eq(a, b) => {
            if den(a, env) == den(b, env) {
                1
            } else {
                -1
            }
        }
        Sk::Bot => -1,
        Sk::Not(a) => -ev(toy, j, a, env),
        Sk::And(a, b) => ev(toy, j, a, env).min(ev(toy, j, b, env)),
        Sk::Or(a, b) => ev(toy, j, a, env).max(ev(toy, j, b, env)),
        Sk::All(x, a) | Sk::Ex(x, a) => {
            let all = matches!(f, Sk::All(..));
            let saved = env[*x];
            let mut acc: V = if all { 1 } else { -1 };
            for e in 0..toy.n {
                env[*x] = e;
                let v = ev(toy, j, a, env);
                acc = if all { acc.min(v) } else { acc.max(v) };
            }
            env[*x] = saved;
            acc
        }
        Sk::Imp(a, b) => {
            let truth = toy.successors(j).into_iter().all(|k| ev(toy, k, a, env) != 1 || ev(toy, k, b, env) == 1);
            if truth {
                1
            } else if ev(toy, j, a, env) == 1 && ev(toy, j, b, env) == -1 {
                -1
            } else {
                0
            }
        }
    }
}

pub fn tv(v: V) -> n3truth::semantics::TruthValue {
    use n3truth::semantics::TruthValue::*;
    match v {
        1 => True,
        -1 => False,
        _ => Undefined,
    }
}

/// Template sequents that the calculi should prove, over random parts.
pub fn templates(r: &mut rand_chacha::ChaCha8Rng, n: usize, cond: bool) -> Vec<(Vec<Sk>, Vec<Sk>)> {
    let a = random_sentence(r, n, 2, cond);
    let b = random_sentence(r, n, 2, cond);
    let not = |x: &Sk| Sk::Not(Box::new(x.clone()));
    let and = |x: &Sk, y: &Sk| Sk::And(Box::new(x.clone()), Box::new(y.clone()));
    let or = |x: &Sk, y: &Sk| Sk::Or(Box::new(x.clone()), Box::new(y.clone()));
    let imp = |x: &Sk, y: &Sk| Sk::Imp(Box::new(x.clone()), Box::new(y.clone()));
    let mut v = vec![
        (vec![a.clone(), not(&a)], vec![]),
        (vec![and(&a, &b)], vec![b.clone()]),
        (vec![a.clone()], vec![or(&b, &a)]),
        (vec![not(&and(&a, &b))], vec![or(&not(&a), &not(&b))]),
        (vec![not(&not(&a))], vec![a.clone()]),
        (vec![random_sentence(r, n, 3, cond)], vec![random_sentence(r, n, 3, cond)]),
        (vec![], vec![random_sentence(r, n, 3, cond)]),
    ];
    if cond {
        v.push((vec![], vec![imp(&a, &a)]));
        v.push((vec![a.clone(), imp(&a, &b)], vec![b.clone()]));
        v.push((vec![and(&a, &not(&b))], vec![not(&imp(&a, &b))]));
        v.push((vec![imp(&a, &b)], vec![imp(&not(&b), &not(&a))]));
    }
    v
}

