//! Two hand-built truth structures and the monotonicity checks run over them.

use n3truth::syntax::Universe;
use n3truth::truth::{Cond, Engine, Family, Valuation};

pub const TOY_A: &str = "predicate P/1\nconstant a\nsentence tau := T('tau')\ninterp J0\ninterp J1\n+ P(a)\n\
                     h J0 J0\nh J1 J1\nh J0 J1\nseed T('P(a)') -> P(a)\ndepth 1\n";
pub const TOY_B: &str = "predicate P/1\nconstant a\nsentence kappa := T('kappa') -> false\ninterp J0\n+ P(a)\nh J0 J0\n\
                     seed P(a)\ndepth 1\n";

/// A toy truth structure: the smallest few start-range valuations, with
/// admissibility flags for `cond`.
pub fn toy_family<'u>(e: &mut Engine<'u>, u: &'u Universe, cond: Cond, size: usize) -> Family<'u> {
    let pool = e.admissible_above(Cond::C, &e.empty(), 10_000).unwrap();
    let mut members: Vec<Valuation> = vec![e.minimal_k_fixpoint()];
    for v in pool {
        if members.len() == size {
            break;
        }
        if !members.contains(&v) {
            members.push(v);
        }
    }
    let basic: Vec<bool> = members.iter().map(|v| e.is_basic(v)).collect();
    let adm: Vec<bool> = members.iter().map(|v| e.meets(cond, v)).collect();
    Family::new(u, members, basic, adm)
}

pub fn check_j_monotone(e: &Engine<'_>, fam: &Family<'_>) -> usize {
    let s = e.structure();
    let mut n = 0;
    for m in 0..fam.len() {
        if !fam.basic[m] {
            continue;
        }
        for &(a, b) in &s.h {
            for x in e.universe().iter() {
                if e.holds_at(fam, m, 0, a, x) {
                    assert!(e.holds_at(fam, m, 0, b, x), "{x} member {m} J{a}->J{b}");
                }
                n += 1;
            }
        }
    }
    n
}

/// Every sub-family `Z` of `fam`, every `f <= g` with `g` in `Z`.
pub fn check_yf_monotone(e: &Engine<'_>, fam: &Family<'_>) -> usize {
    let n = fam.len();
    assert!(n <= 8);
    let mut checks = 0;
    let truths: Vec<Valuation> = (0..n).map(|k| e.theta(fam, k)).collect();
    for mask in 1u32..(1 << n) {
        let keep: Vec<usize> = (0..n).filter(|&k| mask >> k & 1 == 1).collect();
        let z = fam.restrict(&keep);
        for (zi, &g) in keep.iter().enumerate() {
            if !fam.basic[g] {
                continue;
            }
            let tz = e.theta(&z, zi);
            for fi in 0..n {
                if fam.basic[fi] && fam.members[fi].leq(&fam.members[g]) {
                    assert!(truths[fi].leq(&tz), "f={fi} g={g} mask={mask:b}");
                    checks += 1;
                }
            }
        }
    }
    checks
}

pub fn check_gensub(e: &Engine<'_>, fam: &Family<'_>) -> usize {
    let mut checks = 0;
    for g in 0..fam.len() {
        use n3truth::semantics::TruthContext;
        if fam.successors(g).is_empty() {
            continue;
        }
        let sub = fam.generated_by(g);
        assert_eq!(e.theta(fam, g), e.theta(&sub, 0), "member {g}");
        checks += 1;
    }
    checks
}

pub fn check_afl(e: &Engine<'_>, fam: &Family<'_>) -> (usize, usize) {
    let (mut applicable, mut fixed) = (0, 0);
    for k in 0..fam.len() {
        let yf = fam.generated_by(k);
        let t = e.theta(&yf, 0);
        if yf.position(&t).is_none() {
            continue;
        }
        applicable += 1;
        let whole = e.big_theta(&yf, &t).len() == yf.len();
        assert_eq!(whole, t == yf.members[0], "member {k}");
        fixed += usize::from(whole);
    }
    (applicable, fixed)
}

