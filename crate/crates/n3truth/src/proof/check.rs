//! Independent checker for proof trees: every node must be a correct
//! instance of a rule of the chosen calculus.

use super::{Calculus, ProofTree, Rule};
use crate::syntax::{Formula, Kind, SentenceEnv, Term};

fn has(v: &[Formula], f: &Formula) -> bool {
    v.contains(f)
}

/// premise side = (conclusion side minus some of `removable`) plus `adds`
fn side_ok(concl: &[Formula], prem: &[Formula], adds: &[Formula], removable: &[Formula]) -> bool {
    prem.iter().all(|f| has(concl, f) || has(adds, f))
        && adds.iter().all(|f| has(prem, f))
        && concl.iter().all(|f| has(prem, f) || has(removable, f))
}

fn same(a: &[Formula], b: &[Formula]) -> bool {
    a.len() == b.len() && a.iter().all(|f| has(b, f))
}

fn quoted<'a>(env: &'a SentenceEnv, t: &'a Term) -> Option<&'a Formula> {
    match t {
        Term::Quote(q) => env.quoted(q),
        _ => None,
    }
}

fn fresh_in(y: &str, env: &SentenceEnv, node: &ProofTree) -> bool {
    !env.constants.iter().any(|c| &**c == y)
        && !node.sequent.ante.iter().chain(&node.sequent.succ).any(|f| f.mentions_constant(y))
}

/// Checks the whole tree; the error names the first bad node.
pub fn check_proof(env: &SentenceEnv, calc: Calculus, identity: bool, tree: &ProofTree) -> Result<(), String> {
    check_node(env, calc, identity, tree).map_err(|e| format!("{} at `{}`: {}", tree_rule(tree), tree.sequent, e))?;
    for p in &tree.premises {
        check_proof(env, calc, identity, p)?;
    }
    Ok(())
}

fn tree_rule(t: &ProofTree) -> &'static str {
    t.rule.label()
}

fn check_node(env: &SentenceEnv, calc: Calculus, identity: bool, node: &ProofTree) -> Result<(), String> {
    let ga = &node.sequent.ante;
    let de = &node.sequent.succ;
    let prem = &node.premises;
    let arity = match &node.rule {
        Rule::Ax(_) => 0,
        Rule::AndR(_) | Rule::NegAndL(_) | Rule::ImpL(_) | Rule::NegImpR(_) | Rule::Cut(_) => 2,
        _ => 1,
    };
    if prem.len() != arity {
        return Err(format!("expected {} premises, found {}", arity, prem.len()));
    }
    let cond = matches!(node.rule, Rule::ImpL(_) | Rule::ImpR(_) | Rule::NegImpL(..) | Rule::NegImpR(_));
    if cond && !calc.cond_rules() {
        return Err("conditional rule outside its calculus".into());
    }
    let truth = matches!(node.rule, Rule::TL(_) | Rule::TR(_) | Rule::NegTL(_) | Rule::NegTR(_));
    if truth && !calc.truth_rules() {
        return Err("truth rule outside its calculus".into());
    }
    let ident = matches!(node.rule, Rule::Ref(_) | Rule::Rep(..) | Rule::NeqR(_));
    if ident && !identity {
        return Err("identity rule without identity".into());
    }
    let left = |f: &Formula| -> Result<(), String> {
        if has(ga, f) {
            Ok(())
        } else {
            Err(format!("principal `{}` not in the antecedent", f))
        }
    };
    let right = |f: &Formula| -> Result<(), String> {
        if has(de, f) {
            Ok(())
        } else {
            Err(format!("principal `{}` not in the succedent", f))
        }
    };
    // one premise, additions on each side, removable principal on one side
    let unary = |p: &ProofTree, la: &[Formula], ra: &[Formula], lrem: &[Formula], rrem: &[Formula]| {
        if side_ok(ga, &p.sequent.ante, la, lrem) && side_ok(de, &p.sequent.succ, ra, rrem) {
            Ok(())
        } else {
            Err(format!("premise `{}` does not match", p.sequent))
        }
    };
    let shape = |what: &str| Err(format!("principal is not {}", what));
    let none: &[Formula] = &[];

    match &node.rule {
        Rule::Ax(f) => {
            if !calc.is_literal(f) {
                return Err(format!("`{}` is not a literal", f));
            }
            left(f)?;
            right(f)
        }
        Rule::NegL(f) => {
            left(f)?;
            match f.kind() {
                Kind::Not(chi) if calc.is_literal(chi) => {
                    unary(&prem[0], none, std::slice::from_ref(chi), std::slice::from_ref(f), none)
                }
                _ => shape("a negated literal"),
            }
        }
        Rule::DnL(f) => {
            left(f)?;
            match f.kind() {
                Kind::Not(a) => match a.kind() {
                    Kind::Not(b) => unary(&prem[0], std::slice::from_ref(b), none, std::slice::from_ref(f), none),
                    _ => shape("a double negation"),
                },
                _ => shape("a double negation"),
            }
        }
        Rule::DnR(f) => {
            right(f)?;
            match f.kind() {
                Kind::Not(a) => match a.kind() {
                    Kind::Not(b) => unary(&prem[0], none, std::slice::from_ref(b), none, std::slice::from_ref(f)),
                    _ => shape("a double negation"),
                },
                _ => shape("a double negation"),
            }
        }
        Rule::AndL(f, i) => {
            left(f)?;
            match f.kind() {
                Kind::And(a, b) if *i < 2 => {
                    let c = if *i == 0 { a } else { b };
                    unary(&prem[0], std::slice::from_ref(c), none, std::slice::from_ref(f), none)
                }
                _ => shape("a conjunction"),
            }
        }
        Rule::AndR(f) => {
            right(f)?;
            match f.kind() {
                Kind::And(a, b) => {
                    unary(&prem[0], none, std::slice::from_ref(a), none, std::slice::from_ref(f))?;
                    unary(&prem[1], none, std::slice::from_ref(b), none, std::slice::from_ref(f))
                }
                _ => shape("a conjunction"),
            }
        }
        Rule::NegAndL(f) => {
            left(f)?;
            match f.kind() {
                Kind::Not(a) => match a.kind() {
                    Kind::And(x, y) => {
                        unary(&prem[0], &[Formula::not(x.clone())], none, std::slice::from_ref(f), none)?;
                        unary(&prem[1], &[Formula::not(y.clone())], none, std::slice::from_ref(f), none)
                    }
                    _ => shape("a negated conjunction"),
                },
                _ => shape("a negated conjunction"),
            }
        }
        Rule::NegAndR(f, i) => {
            right(f)?;
            match f.kind() {
                Kind::Not(a) => match a.kind() {
                    Kind::And(x, y) if *i < 2 => {
                        let c = if *i == 0 { x } else { y };
                        unary(&prem[0], none, &[Formula::not(c.clone())], none, std::slice::from_ref(f))
                    }
                    _ => shape("a negated conjunction"),
                },
                _ => shape("a negated conjunction"),
            }
        }
        Rule::ForallL(f, t) => {
            left(f)?;
            match f.kind() {
                Kind::Forall(v, b) if t.is_closed() => unary(&prem[0], &[b.subst(v, t)], none, none, none),
                _ => shape("a universal with a closed instance"),
            }
        }
        Rule::NegForallR(f, t) => {
            right(f)?;
            match f.kind() {
                Kind::Not(a) => match a.kind() {
                    Kind::Forall(v, b) if t.is_closed() => {
                        unary(&prem[0], none, &[Formula::not(b.subst(v, t))], none, none)
                    }
                    _ => shape("a negated universal"),
                },
                _ => shape("a negated universal"),
            }
        }
        Rule::ForallR(f, y) => {
            right(f)?;
            if !fresh_in(y, env, node) {
                return Err(format!("eigenvariable `{}` is not fresh", y));
            }
            match f.kind() {
                Kind::Forall(v, b) => {
                    unary(&prem[0], none, &[b.subst(v, &Term::Const(y.clone()))], none, std::slice::from_ref(f))
                }
                _ => shape("a universal"),
            }
        }
        Rule::NegForallL(f, y) => {
            left(f)?;
            if !fresh_in(y, env, node) {
                return Err(format!("eigenvariable `{}` is not fresh", y));
            }
            match f.kind() {
                Kind::Not(a) => match a.kind() {
                    Kind::Forall(v, b) => unary(
                        &prem[0],
                        &[Formula::not(b.subst(v, &Term::Const(y.clone())))],
                        none,
                        std::slice::from_ref(f),
                        none,
                    ),
                    _ => shape("a negated universal"),
                },
                _ => shape("a negated universal"),
            }
        }
        Rule::ImpL(f) => {
            left(f)?;
            match f.kind() {
                Kind::Imp(a, b) => {
                    unary(&prem[0], none, std::slice::from_ref(a), std::slice::from_ref(f), none)?;
                    unary(&prem[1], std::slice::from_ref(b), none, std::slice::from_ref(f), none)
                }
                _ => shape("a conditional"),
            }
        }
        Rule::ImpR(f) => {
            right(f)?;
            match f.kind() {
                Kind::Imp(a, b) => {
                    let p = &prem[0].sequent;
                    let mut want = ga.clone();
                    if !has(&want, a) {
                        want.push(a.clone());
                    }
                    if same(&p.ante, &want) && same(&p.succ, std::slice::from_ref(b)) {
                        Ok(())
                    } else {
                        Err(format!("premise `{}` must be the antecedent plus `{}` => `{}`", p, a, b))
                    }
                }
                _ => shape("a conditional"),
            }
        }
        Rule::NegImpL(f, i) => {
            left(f)?;
            match f.kind() {
                Kind::Not(n) => match n.kind() {
                    Kind::Imp(a, b) if *i < 2 => {
                        let c = if *i == 0 { a.clone() } else { Formula::not(b.clone()) };
                        unary(&prem[0], &[c], none, std::slice::from_ref(f), none)
                    }
                    _ => shape("a negated conditional"),
                },
                _ => shape("a negated conditional"),
            }
        }
        Rule::NegImpR(f) => {
            right(f)?;
            match f.kind() {
                Kind::Not(n) => match n.kind() {
                    Kind::Imp(a, b) => {
                        unary(&prem[0], none, std::slice::from_ref(a), none, std::slice::from_ref(f))?;
                        unary(&prem[1], none, &[Formula::not(b.clone())], none, std::slice::from_ref(f))
                    }
                    _ => shape("a negated conditional"),
                },
                _ => shape("a negated conditional"),
            }
        }
        Rule::TL(f) | Rule::TR(f) | Rule::NegTL(f) | Rule::NegTR(f) => {
            let on_left = matches!(node.rule, Rule::TL(_) | Rule::NegTL(_));
            let negated = matches!(node.rule, Rule::NegTL(_) | Rule::NegTR(_));
            if on_left {
                left(f)?
            } else {
                right(f)?
            }
            let atom = if negated {
                match f.kind() {
                    Kind::Not(a) => a,
                    _ => return shape("a negated truth atom"),
                }
            } else {
                f
            };
            let phi = match atom.kind() {
                Kind::Truth(t) => quoted(env, t).ok_or("truth atom without a quoted sentence")?,
                _ => return shape("a truth atom"),
            };
            let add = if negated { Formula::not(phi.clone()) } else { phi.clone() };
            let pr = std::slice::from_ref(f);
            if on_left {
                unary(&prem[0], &[add], none, pr, none)
            } else {
                unary(&prem[0], none, &[add], none, pr)
            }
        }
        Rule::Ref(t) => {
            if !t.is_closed() {
                return Err("Ref on an open term".into());
            }
            unary(&prem[0], &[Formula::eq_terms(t.clone(), t.clone())], none, none, none)
        }
        Rule::Rep(eq, from, to) => {
            left(eq)?;
            left(from)?;
            let Kind::Eq(s, t) = eq.kind() else { return shape("an identity") };
            if !from.replace_term_once(s, t).contains(to) {
                return Err(format!("`{}` is not `{}` with one `{}` replaced by `{}`", to, from, s, t));
            }
            unary(&prem[0], std::slice::from_ref(to), none, &[eq.clone(), from.clone()], none)
        }
        Rule::NeqR(f) => {
            right(f)?;
            match f.kind() {
                Kind::Not(a) if matches!(a.kind(), Kind::Eq(..)) => {
                    unary(&prem[0], std::slice::from_ref(a), none, none, std::slice::from_ref(f))
                }
                _ => shape("a negated identity"),
            }
        }
        Rule::Cut(c) => {
            unary(&prem[0], none, std::slice::from_ref(c), none, none)?;
            unary(&prem[1], std::slice::from_ref(c), none, none, none)
        }
    }
}
