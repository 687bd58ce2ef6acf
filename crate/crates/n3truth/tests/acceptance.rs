//! One PASS/FAIL line per acceptance criterion. Lines go straight to the
//! stderr handle so they show up without `--nocapture`.
//!
//! Tolerances are pinned at zero: every count below is of counterexamples
//! and must be exactly 0, and the minimum sample sizes are fixed.

mod common;

use common::frames::{check_all_valuations, frames};
use common::replay::{self, CORPUS};
use common::toys::{check_afl, check_gensub, check_j_monotone, check_yf_monotone, toy_family, TOY_A, TOY_B};
use common::{oracle, random_sentence, rng, templates, tv, Toy};
use n3truth::modal::{eval_modal, Frame};
use n3truth::model::Model;
use n3truth::proof::{check_proof, curry_derivation, Calculus, Limits, Outcome, Prover};
use n3truth::semantics::{eval, Assignment, Evaluator, Point};
use n3truth::syntax::{parse_formula, parse_sequent, Formula};
use n3truth::truth::{principle_asserted, Cond, Engine, RunOptions, THETA_EMPTY};
use rand::seq::SliceRandom;
use rand::Rng;
use std::collections::BTreeMap;
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

const MAX_ZERO: usize = 0;

fn limits() -> Limits {
    Limits { max_nodes: 20_000, max_eigen: 3, cut_depth: 0 }
}

fn line(s: &str) {
    let mut e = std::io::stderr().lock();
    let _ = writeln!(e, "{s}");
}

type Outcome_ = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn canon(m: &Model, t: &str) -> Formula {
    m.env.canonical(&parse_formula(t, &m.env).unwrap())
}

fn persistence() -> Outcome_ {
    let mut r = rng(1001);
    let mut bad = 0;
    let mut checks = 0;
    for _ in 0..200 {
        let toy = Toy::random(&mut r);
        let m = toy.model();
        let seeds: Vec<Formula> = (0..2).map(|_| random_sentence(&mut r, toy.n, 3, true).formula(&m)).collect();
        let u = n3truth::syntax::build_universe(&m.env, &seeds, 1, 5000).map_err(|e| e.to_string())?;
        let ev = Evaluator::new(&m.structure, &m.env);
        for f in u.iter() {
            for g in [f.clone(), Formula::not(f.clone())] {
                for &(a, b) in &toy.h {
                    checks += 1;
                    if ev.holds(Point::plain(a), &g) && !ev.holds(Point::plain(b), &g) {
                        bad += 1;
                    }
                }
            }
        }
    }
    ensure(bad <= MAX_ZERO, format!("{bad} counterexamples in {checks} checks"))?;
    Ok(format!("200 structures, {checks} checks, 0 counterexamples"))
}

fn k3_agreement() -> Outcome_ {
    let mut r = rng(1002);
    let mut bad = 0;
    for _ in 0..500 {
        let toy = Toy::random(&mut r);
        let m = toy.model();
        let sk = random_sentence(&mut r, toy.n, 4, false);
        let f = sk.formula(&m);
        let j = r.gen_range(0..toy.interps.len());
        let got = eval(&m.structure, &m.env, j, &Assignment::new(), &f).map_err(|e| e.to_string())?;
        if got != tv(oracle(&toy, j, &sk)) {
            bad += 1;
        }
    }
    ensure(bad <= MAX_ZERO, format!("{bad} of 500 pairs disagree"))?;
    Ok("500 pairs, exact agreement".into())
}

const FP_CONDS: [Cond; 4] = [Cond::C, Cond::K3, Cond::N3, Cond::Nve];
const PARADOXES: [&str; 3] = ["liar", "curry", "truthteller"];

fn fixed_points() -> Outcome_ {
    let mut n = 0;
    for name in PARADOXES {
        let m = common::corpus(name);
        let u = m.universe(None).map_err(|e| e.to_string())?;
        for cond in FP_CONDS {
            let mut e = Engine::new(&m.structure, &m.env, &u, limits());
            let r = e.run(cond, &RunOptions::default()).map_err(|e| e.to_string())?;
            ensure(r.is_fixed_point(), format!("{name} {}: {:?}", cond.name(), r.reason))?;
            let v = r.verification.as_ref().ok_or("no verification")?;
            ensure(v.theta_fixes_g && v.big_theta_fixes_z, format!("{name} {}: verification failed", cond.name()))?;
            let fam = e.result_family(cond, &r);
            let nv = e.check_naivety(&fam);
            ensure(nv.len() <= MAX_ZERO, format!("{name} {}: {}", cond.name(), nv.join("; ")))?;
            n += 1;
        }
    }
    Ok(format!("{n} runs reach verified fixed points, 0 naivety failures"))
}

fn paradox_diagnostics() -> Outcome_ {
    let liar = common::corpus("liar");
    let lu = liar.universe(None).map_err(|e| e.to_string())?;
    let mut e = Engine::new(&liar.structure, &liar.env, &lu, limits());
    let r = e.run(Cond::Nve, &RunOptions::default()).map_err(|e| e.to_string())?;
    let l = canon(&liar, "lambda");
    for j in 0..liar.structure.n_interps() {
        let cell = r.g.sentences(&lu, 0, j);
        ensure(!cell.contains(&l) && !cell.contains(&Formula::not(l.clone())), "lambda or its negation in g")?;
    }

    let m = common::corpus("curry");
    let u = m.universe(None).map_err(|e| e.to_string())?;
    let mut e = Engine::new(&m.structure, &m.env, &u, limits());
    let r = e.run(Cond::Nve, &RunOptions::default()).map_err(|e| e.to_string())?;
    let fam = e.result_family(Cond::Nve, &r);
    let kss = e.generated_substructure(&fam);
    let k = canon(&m, "kappa");
    let tk = canon(&m, "T('kappa')");
    for j in 0..m.structure.n_interps() {
        let cell = r.g.sentences(&u, 0, j);
        ensure(!cell.contains(&k) && !cell.contains(&Formula::not(k.clone())), "kappa or its negation in g")?;
        ensure(e.holds_at(&kss.sub, 0, 0, j, &Formula::imp(k.clone(), k.clone())), "kappa -> kappa not true")?;
        ensure(!e.holds_at(&kss.sub, 0, 0, j, &Formula::imp(tk.clone(), k.clone())), "T(kappa) -> kappa true")?;
    }
    let found = e.find_admissible_with(Cond::Nve, &r.g, &k, 10_000).map_err(|e| e.to_string())?;
    let (g, w, j) = found.ok_or("no admissible valuation holds kappa")?;
    ensure(g.contains(w, j, u.index_of(&k).unwrap()), "witness lacks kappa")?;
    Ok(format!("lambda and kappa undecided; kappa found at {}", e.cell_name(w, j)))
}

fn impossibility() -> Outcome_ {
    let m = common::corpus("curry");
    let u = m.universe(None).map_err(|e| e.to_string())?;
    let mut e = Engine::new(&m.structure, &m.env, &u, limits());
    let r = e.run(Cond::N3Nve, &RunOptions::default()).map_err(|e| e.to_string())?;
    ensure(!r.is_fixed_point(), "n3nve reached a fixed point on curry")?;
    ensure(r.reason.as_deref() == Some(THETA_EMPTY), format!("reason {:?}", r.reason))?;
    let d = r.detail.clone().unwrap_or_default();
    ensure(d.contains("either it is in f(J0) or it is not") && d.contains("`kappa`"), format!("detail: {d}"))?;
    let model = common::models_dir().join("curry.model");
    let run = replay::run(&["fixpoint".into(), model.to_string_lossy().into(), "--cond".into(), "n3nve".into()]);
    ensure(run.code == 3, format!("exit {}", run.code))?;
    ensure(replay::verdict(&run.stdout) == "collapse", "verdict is not collapse")?;
    Ok("collapse with the case split on kappa, exit 3".into())
}

fn principles() -> Outcome_ {
    let mut asserted = 0;
    let mut instances = 0;
    // per principle, summed over models: liar alone has no conditionals
    let mut covered: BTreeMap<char, usize> = BTreeMap::new();
    for name in PARADOXES {
        let m = common::corpus(name);
        let u = m.universe(None).map_err(|e| e.to_string())?;
        for cond in [Cond::K3, Cond::N3, Cond::Nve] {
            let mut e = Engine::new(&m.structure, &m.env, &u, limits());
            let r = e.run(cond, &RunOptions::default()).map_err(|e| e.to_string())?;
            let fam = e.result_family(cond, &r);
            let kss = e.generated_substructure(&fam);
            for rep in e.check_principles(cond, &kss.sub) {
                let p = rep.principle.chars().next().unwrap();
                ensure(rep.asserted == principle_asserted(cond, p), "assertion table mismatch")?;
                if rep.asserted {
                    *covered.entry(p).or_default() += rep.instances;
                    ensure(
                        rep.violations.len() <= MAX_ZERO,
                        format!("{name} {} ({p}): {}", cond.name(), rep.violations.join("; ")),
                    )?;
                    asserted += 1;
                    instances += rep.instances;
                }
            }
        }
    }
    let empty: Vec<char> = ('a'..='k').filter(|p| covered.get(p).copied().unwrap_or(0) == 0).collect();
    ensure(empty.is_empty(), format!("no instances of {empty:?}"))?;
    for (p, want) in [('h', [false, true, false]), ('j', [false, false, true])] {
        let got = [Cond::K3, Cond::N3, Cond::Nve].map(|c| principle_asserted(c, p));
        ensure(got == want, format!("({p}) asserted under {got:?}"))?;
    }
    Ok(format!("{asserted} asserted suites, {instances} instances, 0 violations"))
}

fn prover() -> Outcome_ {
    let e = Model::parse("predicate P/1 Q/1\nconstant a b\nsentence kappa := T('kappa') -> false\ninterp J0\nh J0 J0\n")
        .unwrap()
        .env;
    let decide = |c: Calculus, id: bool, s: &str| -> Result<Outcome, String> {
        let mut env = e.clone();
        let (g, d) = parse_sequent(s, &mut env, false).map_err(|x| x.to_string())?;
        let mut p = Prover::new(c, id, &env, Limits { max_nodes: 50_000, max_eigen: 3, cut_depth: 0 });
        let out = p.prove(&g, &d);
        if let Outcome::Proved(Some(t)) = &out {
            ensure(check_proof(&env, c, id, t).is_ok(), format!("proof of {s} rejected"))?;
        }
        Ok(out)
    };
    ensure(decide(Calculus::K3, false, "P(a), ~P(a) => false")?.is_proved(), "phi, ~phi => false")?;
    ensure(decide(Calculus::K3, false, "=> P(a), ~P(a)")? == Outcome::NotProved, "=> phi, ~phi")?;
    ensure(decide(Calculus::N3, false, "=> P(a) -> P(a)")?.is_proved(), "=> phi -> phi")?;
    ensure(decide(Calculus::N3, false, "P(a) -> Q(a) => ~Q(a) -> ~P(a)")? == Outcome::NotProved, "contraposition")?;
    ensure(decide(Calculus::K3, true, "a = b, a != b =>")?.is_proved(), "s = t, s != t =>")?;
    let t = curry_derivation(&e, "kappa").map_err(|x| x.to_string())?;
    ensure(check_proof(&e, Calculus::N3T, false, &t).is_ok(), "curry derivation rejected")?;

    let mut r = rng(1007);
    let (mut checks, mut bad, mut rounds) = (0usize, 0usize, 0);
    while checks < 300 {
        rounds += 1;
        ensure(rounds < 400, "too few provable sequents")?;
        let toy = Toy::random(&mut r);
        let m = toy.model();
        let cond = rounds % 2 == 0;
        let calc = if cond { Calculus::N3 } else { Calculus::K3 };
        for (g, d) in templates(&mut r, toy.n, cond) {
            let gf: Vec<Formula> = g.iter().map(|x| x.formula(&m)).collect();
            let df: Vec<Formula> = d.iter().map(|x| x.formula(&m)).collect();
            if !Prover::new(calc, true, &m.env, limits()).decide(&gf, &df).is_proved() {
                continue;
            }
            for j in 0..toy.interps.len() {
                let ante = g.iter().all(|x| oracle(&toy, j, x) == 1);
                if ante && !d.iter().any(|x| oracle(&toy, j, x) == 1) {
                    bad += 1;
                }
            }
            checks += 1;
        }
    }
    ensure(bad <= MAX_ZERO, format!("{bad} semantic counterexamples"))?;
    Ok(format!("corpus as expected; {checks} proved sequents sound"))
}

fn deduction_theorem() -> Outcome_ {
    let mut r = rng(1008);
    let mut points = 0;
    let mut agree_true = 0;
    for name in PARADOXES {
        let m = common::corpus(name);
        let u = m.universe(None).map_err(|e| e.to_string())?;
        let pool: Vec<Formula> = u.iter().cloned().collect();
        for cond in FP_CONDS {
            let mut e = Engine::new(&m.structure, &m.env, &u, limits());
            let res = e.run(cond, &RunOptions::default()).map_err(|e| e.to_string())?;
            let fam = e.result_family(cond, &res);
            let kss = e.generated_substructure(&fam);
            for _ in 0..200 {
                let k = r.gen_range(0..=2);
                let gamma: Vec<Formula> = pool.choose_multiple(&mut r, k).cloned().collect();
                let phi = pool.choose(&mut r).unwrap();
                let psi = pool.choose(&mut r).unwrap();
                let (a, b) = e.deduction_theorem(&kss.sub, &gamma, phi, psi);
                ensure(a == b, format!("{name} {}: {gamma:?}, {phi} / {psi}: {a} vs {b}", cond.name()))?;
                agree_true += usize::from(a);
            }
            points += 1;
        }
    }
    Ok(format!("{points} fixed points x 200 triples agree ({agree_true} valid)"))
}

fn toys() -> Outcome_ {
    let mut counts = [0usize; 4];
    for (text, cond) in [(TOY_A, Cond::N3), (TOY_B, Cond::Nve)] {
        let m = Model::parse(text).map_err(|e| e.to_string())?;
        let u = m.universe(None).map_err(|e| e.to_string())?;
        let mut e = Engine::new(&m.structure, &m.env, &u, limits());
        let fam = toy_family(&mut e, &u, cond, 7);
        let (j, yf, gs) = catch(|| (check_j_monotone(&e, &fam), check_yf_monotone(&e, &fam), check_gensub(&e, &fam)))?;
        let res = e.run(cond, &RunOptions::default()).map_err(|e| e.to_string())?;
        let z = e.result_family(cond, &res);
        let ((a1, _), (a2, f2)) = catch(|| (check_afl(&e, &fam), check_afl(&e, &z)))?;
        ensure(f2 > 0, "no AFL fixed instance")?;
        counts[0] += j;
        counts[1] += yf;
        counts[2] += gs;
        counts[3] += a1 + a2;
    }
    ensure(counts.iter().all(|&c| c > 0), format!("empty check {counts:?}"))?;
    Ok(format!("J-mono {} / (Y,f)-mono {} / gensub {} / AFL {} checks", counts[0], counts[1], counts[2], counts[3]))
}

fn catch<T>(f: impl FnOnce() -> T) -> Result<T, String> {
    catch_unwind(AssertUnwindSafe(f)).map_err(|p| {
        p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default()
    })
}

fn modal() -> Outcome_ {
    let mut r = rng(1010);
    for _ in 0..40 {
        let toy = Toy::random(&mut r);
        let m = toy.model();
        let mut s = m.structure.clone();
        s.frame = Some(Frame::single("w0"));
        let mut refl = s.clone();
        refl.frame = Some(Frame::new(vec!["w0".into()], &[(0, 0)], vec![BTreeMap::from([(0, 0)])]));
        for _ in 0..5 {
            let f = random_sentence(&mut r, toy.n, 3, true).formula(&m);
            for j in 0..toy.interps.len() {
                let plain = eval(&m.structure, &m.env, j, &Assignment::new(), &f).map_err(|e| e.to_string())?;
                let a = eval_modal(&s, &m.env, 0, j, &Assignment::new(), &f).map_err(|e| e.to_string())?;
                let b = eval_modal(&refl, &m.env, 0, j, &Assignment::new(), &Formula::boxed(f.clone()))
                    .map_err(|e| e.to_string())?;
                ensure(a == plain && b == plain, format!("degenerate frame differs on {f}"))?;
            }
        }
    }
    ensure(frames(2).len() == 36 && frames(3).len() == 10840, "frame enumeration")?;
    let two = catch(|| check_all_valuations(2, 1))?;
    let three = catch(|| check_all_valuations(3, 1))?;
    ensure(two == 36 * 81 * 2 * 2 && three == 10840 * 729 * 3 * 2, "sweep incomplete")?;

    let m = common::corpus("modal-toy");
    let u = m.universe(None).map_err(|e| e.to_string())?;
    for cond in [Cond::C, Cond::K3, Cond::N3, Cond::Nve] {
        let res = n3truth::modal::modal_fixed_point(&m.structure, &m.env, &u, cond, &RunOptions::default())
            .map_err(|e| e.to_string())?;
        ensure(res.is_fixed_point(), format!("modal-toy {} did not reach a fixed point", cond.name()))?;
        let mut e = Engine::new(&m.structure, &m.env, &u, limits());
        let fam = e.result_family(cond, &res);
        let nv = e.check_naivety(&fam);
        ensure(nv.len() <= MAX_ZERO, nv.join("; "))?;
    }
    Ok(format!("degenerate frames exact; {} clause checks on all 2-/3-world frames; modal-toy naive", two + three))
}

fn determinism() -> Outcome_ {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut n = 0;
    for name in CORPUS {
        for ex in replay::expectations(name) {
            let args = replay::expand(name, &ex.args, dir.path());
            let a = replay::run(&args);
            let b = replay::run(&args);
            ensure(
                a.code == b.code && replay::without_timing(&a.stdout) == replay::without_timing(&b.stdout),
                format!("{name}.expect:{} differs between runs", ex.line),
            )?;
            n += 1;
        }
    }
    Ok(format!("{n} corpus commands, identical reports modulo timing"))
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome_); 11] = [
        ("persistence", persistence),
        ("k3-agreement", k3_agreement),
        ("fixed-point-existence", fixed_points),
        ("paradox-diagnostics", paradox_diagnostics),
        ("impossibility", impossibility),
        ("principles", principles),
        ("prover", prover),
        ("deduction-theorem", deduction_theorem),
        ("monotonicity", toys),
        ("modal", modal),
        ("determinism", determinism),
    ];
    let mut failed = Vec::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let out = catch(f).and_then(|r| r);
        let secs = t.elapsed().as_secs_f64();
        match out {
            Ok(msg) => line(&format!("acceptance {:>2} {name}: PASS ({msg}; {secs:.1}s)", i + 1)),
            Err(msg) => {
                line(&format!("acceptance {:>2} {name}: FAIL ({msg}; {secs:.1}s)", i + 1));
                failed.push(*name);
            }
        }
    }
    assert!(failed.is_empty(), "failed: {failed:?}");
}
