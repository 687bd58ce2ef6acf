//! Exhaustive frame enumeration and a brute-force reading of the truth and
//! falsity clauses for `~>`, shared by the modal oracle and acceptance suites.

use n3truth::modal::{validate_frame, Frame};
use n3truth::model::Model;
use n3truth::semantics::{Evaluator, Ext, Interp, Point, PredMap, Structure, TruthValue};
use n3truth::syntax::{parse_formula, sym, SentenceEnv};
use std::collections::{BTreeMap, HashSet};

/// Dense weak orders on `k` items: rank vectors with no gaps.
fn weak_orders(k: usize) -> Vec<Vec<u64>> {
    let mut out = Vec::new();
    let total = k.pow(k as u32);
    for code in 0..total {
        let r: Vec<u64> = (0..k).map(|i| ((code / k.pow(i as u32)) % k) as u64).collect();
        let mut vals: Vec<u64> = r.clone();
        vals.sort_unstable();
        vals.dedup();
        let dense: Vec<u64> = r.iter().map(|x| vals.iter().position(|v| v == x).unwrap() as u64).collect();
        if !out.contains(&dense) {
            out.push(dense);
        }
    }
    out
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

type Key = (Vec<(usize, usize)>, Vec<Vec<(usize, u64)>>);

/// All frames on `n` worlds up to renaming of worlds.
pub fn frames(n: usize) -> Vec<Frame> {
    let perms = permutations(n);
    let mut seen: HashSet<Key> = HashSet::new();
    let mut out = Vec::new();
    let names: Vec<String> = (0..n).map(|i| format!("w{i}")).collect();
    for bits in 0..(1u32 << (n * n)) {
        let r: Vec<(usize, usize)> =
            (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).filter(|&(a, b)| bits >> (a * n + b) & 1 == 1).collect();
        let carriers: Vec<Vec<usize>> = (0..n)
            .map(|w| {
                let mut c: Vec<usize> = r.iter().filter(|p| p.0 == w).map(|p| p.1).collect();
                c.push(w);
                c.sort_unstable();
                c.dedup();
                c
            })
            .collect();
        let orders: Vec<Vec<Vec<u64>>> = carriers.iter().map(|c| weak_orders(c.len())).collect();
        let mut pick = vec![0usize; n];
        'odometer: loop {
            let ranks: Vec<BTreeMap<usize, u64>> =
                (0..n).map(|w| carriers[w].iter().copied().zip(orders[w][pick[w]].iter().copied()).collect()).collect();
            let key = |p: &Vec<usize>| -> Key {
                let mut rr: Vec<(usize, usize)> = r.iter().map(|&(a, b)| (p[a], p[b])).collect();
                rr.sort_unstable();
                let mut rk = vec![Vec::new(); n];
                for w in 0..n {
                    let mut e: Vec<(usize, u64)> = ranks[w].iter().map(|(&v, &x)| (p[v], x)).collect();
                    e.sort_unstable();
                    rk[p[w]] = e;
                }
                (rr, rk)
            };
            let canon = perms.iter().map(key).min().unwrap();
            if seen.insert(canon) {
                out.push(Frame::new(names.clone(), &r, ranks));
            }
            let mut i = 0;
            loop {
                if i == n {
                    break 'odometer;
                }
                pick[i] += 1;
                if pick[i] < orders[i].len() {
                    break;
                }
                pick[i] = 0;
                i += 1;
            }
        }
    }
    out
}

pub fn env() -> SentenceEnv {
    Model::parse("predicate P/1 Q/1\nconstant a\nworld w0\nrank w0 w0=0\ninterp J0\nh J0 J0\n").unwrap().env
}

fn atom_map(p: i8, q: i8) -> PredMap {
    let mut m = PredMap::default();
    for (name, v) in [("P", p), ("Q", q)] {
        let mut e = Ext::default();
        match v {
            1 => {
                e.pos.insert(vec![0]);
            }
            -1 => {
                e.neg.insert(vec![0]);
            }
            _ => {}
        }
        m.preds.insert(sym(name), e);
    }
    m
}

pub fn structure(frame: Frame, vals: &[(i8, i8)]) -> Structure {
    many(frame, &[vals.to_vec()])
}

/// One interpretation per valuation, each admissible only from itself, so
/// a single evaluator covers them all.
fn many(frame: Frame, vals: &[Vec<(i8, i8)>]) -> Structure {
    let interps = vals
        .iter()
        .enumerate()
        .map(|(j, v)| Interp { name: format!("J{j}"), worlds: v.iter().map(|&(p, q)| atom_map(p, q)).collect() })
        .collect();
    Structure::new(
        vec!["a".into()],
        BTreeMap::from([(sym("a"), 0)]),
        BTreeMap::new(),
        interps,
        (0..vals.len()).map(|j| (j, j)).collect(),
        Some(frame),
    )
}

/// Brute-force truth value of `psi ~> chi` where each side is
/// a literal given by its per-world values. One interpretation, so the
/// inner conditional is local.
pub fn brute(fr: &Frame, w: usize, psi: &[i8], chi: &[i8]) -> TruthValue {
    let succ = fr.successors(w);
    let carrier = fr.carrier(w);
    let imp = |u: usize| psi[u] != 1 || chi[u] == 1;
    let imposs = succ.iter().all(|&v| psi[v] == -1);
    let witness = succ.iter().any(|&v| {
        psi[v] == 1 && carrier.iter().all(|&u| fr.rank(w, u) > fr.rank(w, v) || imp(u))
    });
    if imposs || witness {
        return TruthValue::True;
    }
    let some = succ.iter().any(|&v| psi[v] == 1);
    let beaten = succ.iter().filter(|&&v| psi[v] == 1).all(|&v| {
        carrier.iter().any(|&u| fr.rank(w, u) < fr.rank(w, v) && psi[u] == 1 && chi[u] == -1)
    });
    if some && beaten {
        TruthValue::False
    } else {
        TruthValue::Undefined
    }
}

pub fn check_all_valuations(n: usize, stride: usize) -> usize {
    let e = env();
    // the four-sentence universe: P(a), Q(a) and two conditionals over them
    let pq = parse_formula("P(a) ~> Q(a)", &e).unwrap();
    let npq = parse_formula("~P(a) ~> Q(a)", &e).unwrap();
    let total = 9usize.pow(n as u32);
    let mut checked = 0;
    let all: Vec<Vec<(i8, i8)>> = (0..total)
        .step_by(stride)
        .map(|code| {
            (0..n)
                .map(|i| {
                    let d = (code / 9usize.pow(i as u32)) % 9;
                    ((d % 3) as i8 - 1, (d / 3) as i8 - 1)
                })
                .collect()
        })
        .collect();
    for fr in frames(n) {
        assert!(validate_frame(&fr).is_empty());
        let s = many(fr.clone(), &all);
        let ev = Evaluator::new(&s, &e);
        for (j, vals) in all.iter().enumerate() {
            let p: Vec<i8> = vals.iter().map(|v| v.0).collect();
            let q: Vec<i8> = vals.iter().map(|v| v.1).collect();
            let np: Vec<i8> = p.iter().map(|x| -x).collect();
            for w in 0..n {
                let at = Point { w, j, m: None };
                assert_eq!(ev.value_unchecked(at, &pq), brute(&fr, w, &p, &q), "{fr:?} {vals:?} w{w}");
                assert_eq!(ev.value_unchecked(at, &npq), brute(&fr, w, &np, &q), "{fr:?} {vals:?} w{w}");
                checked += 2;
            }
        }
    }
    checked
}

