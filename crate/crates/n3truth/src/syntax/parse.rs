//! Recursive-descent parser for the concrete grammar.
//!
//! Precedence, loosest first: `<->`, then `->` `~>` `[]->` (right
//! associative), `|`, `&`, then the prefix operators `~` `[]` `A x` `E x`.

use super::{sym, Formula, QuoteRef, SentenceEnv, Term};
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub pos: usize,
    pub msg: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "parse error at column {}: {}", self.pos + 1, self.msg)
    }
}
impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Quote,
    LParen,
    RParen,
    Comma,
    Tilde,
    Amp,
    Bar,
    Arrow,
    Iff,
    Would,
    Strict,
    Box,
    Eq,
    Neq,
    Turnstile,
    End,
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let b = text.as_bytes();
    let mut i = 0;
    let mut out = Vec::new();
    while i < b.len() {
        let c = b[i] as char;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let rest = &text[i..];
        let (tok, len) = if rest.starts_with("[]->") {
            (Tok::Strict, 4)
        } else if rest.starts_with("<->") {
            (Tok::Iff, 3)
        } else if rest.starts_with("->") {
            (Tok::Arrow, 2)
        } else if rest.starts_with("~>") {
            (Tok::Would, 2)
        } else if rest.starts_with("[]") {
            (Tok::Box, 2)
        } else if rest.starts_with("=>") {
            (Tok::Turnstile, 2)
        } else if rest.starts_with("!=") {
            (Tok::Neq, 2)
        } else {
            match c {
                '\'' => (Tok::Quote, 1),
                '(' => (Tok::LParen, 1),
                ')' => (Tok::RParen, 1),
                ',' => (Tok::Comma, 1),
                '~' => (Tok::Tilde, 1),
                '&' => (Tok::Amp, 1),
                '|' => (Tok::Bar, 1),
                '=' => (Tok::Eq, 1),
                c if c.is_ascii_alphabetic() || c == '_' => {
                    let mut j = i;
                    while j < b.len() && ((b[j] as char).is_ascii_alphanumeric() || b[j] == b'_') {
                        j += 1;
                    }
                    (Tok::Ident(text[i..j].to_string()), j - i)
                }
                _ => return Err(ParseError { pos: i, msg: format!("unexpected character `{}`", c) }),
            }
        };
        out.push((tok, i));
        i += len;
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

enum EnvRef<'a> {
    Fixed(&'a SentenceEnv),
    Auto(&'a mut SentenceEnv),
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    at: usize,
    env: EnvRef<'a>,
    bound: Vec<String>,
}

impl<'a> Parser<'a> {
    fn env(&self) -> &SentenceEnv {
        match &self.env {
            EnvRef::Fixed(e) => e,
            EnvRef::Auto(e) => e,
        }
    }
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }
    fn peek2(&self) -> &Tok {
        &self.toks[(self.at + 1).min(self.toks.len() - 1)].0
    }
    fn pos(&self) -> usize {
        self.toks[self.at].1
    }
    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }
    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError { pos: self.pos(), msg: msg.into() })
    }
    fn expect(&mut self, t: Tok, what: &str) -> Result<(), ParseError> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected {}", what))
        }
    }

    fn formula(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.cond()?;
        if *self.peek() == Tok::Iff {
            self.bump();
            let rhs = self.formula()?;
            return Ok(Formula::iff(lhs, rhs));
        }
        Ok(lhs)
    }

    fn cond(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.disj()?;
        match self.peek() {
            Tok::Arrow => {
                self.bump();
                Ok(Formula::imp(lhs, self.cond()?))
            }
            Tok::Would | Tok::Strict => {
                if !self.env().modal {
                    return self.err("modal connective used without a frame");
                }
                let strict = *self.peek() == Tok::Strict;
                self.bump();
                let rhs = self.cond()?;
                Ok(if strict { Formula::strict(lhs, rhs) } else { Formula::would(lhs, rhs) })
            }
            _ => Ok(lhs),
        }
    }

    fn disj(&mut self) -> Result<Formula, ParseError> {
        let mut acc = self.conj()?;
        while *self.peek() == Tok::Bar {
            self.bump();
            acc = Formula::or(acc, self.conj()?);
        }
        Ok(acc)
    }

    fn conj(&mut self) -> Result<Formula, ParseError> {
        let mut acc = self.unary()?;
        while *self.peek() == Tok::Amp {
            self.bump();
            acc = Formula::and(acc, self.unary()?);
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        match self.peek().clone() {
            Tok::Tilde => {
                self.bump();
                Ok(Formula::not(self.unary()?))
            }
            Tok::Box => {
                if !self.env().modal {
                    return self.err("modal connective used without a frame");
                }
                self.bump();
                Ok(Formula::boxed(self.unary()?))
            }
            Tok::Ident(q) if (q == "A" || q == "E") && matches!(self.peek2(), Tok::Ident(_)) => {
                self.bump();
                let v = match self.bump() {
                    Tok::Ident(v) => v,
                    _ => unreachable!(),
                };
                if self.env().constants.iter().any(|c| **c == *v) || self.env().is_sentence(&v) {
                    return self.err(format!("`{}` is already a constant or sentence and cannot be bound", v));
                }
                self.bound.push(v.clone());
                let body = self.unary();
                self.bound.pop();
                let body = body?;
                Ok(if q == "A" { Formula::forall(&v, body) } else { Formula::exists(&v, body) })
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Formula, ParseError> {
        match self.peek().clone() {
            Tok::LParen => {
                self.bump();
                let f = self.formula()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(f)
            }
            Tok::Ident(id) if id == "false" => {
                self.bump();
                Ok(Formula::falsum())
            }
            Tok::Ident(id) if id == "true" => {
                self.bump();
                Ok(Formula::verum())
            }
            Tok::Ident(id) if id == "T" && *self.peek2() == Tok::LParen => {
                self.bump();
                self.bump();
                let t = self.term()?;
                self.expect(Tok::RParen, "`)` closing T(...)")?;
                Ok(Formula::truth(t))
            }
            Tok::Ident(id) => {
                let pos = self.pos();
                if let Some(&ar) = self.env().predicates.get(id.as_str()) {
                    self.bump();
                    return self.atom_args(&id, Some(ar), pos);
                }
                if self.env().is_sentence(&id) && !self.bound.contains(&id) {
                    self.bump();
                    return match self.env().definition(&id) {
                        Some(f) => Ok(f.clone()),
                        None => Err(ParseError { pos, msg: format!("sentence `{}` used before its definition", id) }),
                    };
                }
                let known_term = self.bound.contains(&id)
                    || self.env().constants.iter().any(|c| **c == *id)
                    || self.env().functions.contains_key(id.as_str());
                if !known_term {
                    if let EnvRef::Auto(_) = self.env {
                        // an unknown name in formula position becomes a predicate
                        // unless an identity sign follows its term
                        if !self.looks_like_identity() {
                            self.bump();
                            return self.atom_args(&id, None, pos);
                        }
                    } else {
                        return Err(ParseError { pos, msg: format!("unknown predicate, constant or sentence `{}`", id) });
                    }
                }
                self.identity()
            }
            Tok::Quote => self.identity(),
            _ => self.err("expected a formula"),
        }
    }

    /// Scans ahead over a balanced term to see whether `=` or `!=` follows.
    fn looks_like_identity(&self) -> bool {
        let mut i = self.at + 1;
        if self.toks[i].0 == Tok::LParen {
            let mut depth = 0i32;
            while i < self.toks.len() {
                match self.toks[i].0 {
                    Tok::LParen => depth += 1,
                    Tok::RParen => {
                        depth -= 1;
                        if depth == 0 {
                            i += 1;
                            break;
                        }
                    }
                    Tok::End => return false,
                    _ => {}
                }
                i += 1;
            }
        }
        matches!(self.toks.get(i).map(|t| &t.0), Some(Tok::Eq) | Some(Tok::Neq))
    }

    fn atom_args(&mut self, name: &str, arity: Option<usize>, pos: usize) -> Result<Formula, ParseError> {
        let mut args = Vec::new();
        if *self.peek() == Tok::LParen {
            self.bump();
            if *self.peek() != Tok::RParen {
                loop {
                    let t = self.term()?;
                    if matches!(t, Term::Quote(_)) {
                        return self.err(format!("predicate `{}` takes element terms, not quotations", name));
                    }
                    args.push(t);
                    if *self.peek() == Tok::Comma {
                        self.bump();
                    } else {
                        break;
                    }
                }
            }
            self.expect(Tok::RParen, "`)`")?;
        }
        match arity {
            Some(a) if a != args.len() => Err(ParseError {
                pos,
                msg: format!("predicate `{}` expects {} argument(s), got {}", name, a, args.len()),
            }),
            Some(_) => Ok(Formula::atom(name, args)),
            None => {
                if let EnvRef::Auto(env) = &mut self.env {
                    env.add_predicate(name, args.len()).map_err(|e| ParseError { pos, msg: e.to_string() })?;
                }
                Ok(Formula::atom(name, args))
            }
        }
    }

    fn identity(&mut self) -> Result<Formula, ParseError> {
        let s = self.term()?;
        let neg = match self.bump() {
            Tok::Eq => false,
            Tok::Neq => true,
            _ => {
                self.at -= 1;
                return self.err("expected `=` or `!=` after a term");
            }
        };
        let t = self.term()?;
        let f = Formula::eq_terms(s, t);
        Ok(if neg { Formula::not(f) } else { f })
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        let pos = self.pos();
        match self.bump() {
            Tok::Quote => {
                // a lone sentence name is quoted by name (this is what lets a
                // definition mention itself)
                if let (Tok::Ident(id), Tok::Quote) = (self.peek().clone(), self.peek2().clone()) {
                    if self.env().is_sentence(&id) {
                        self.bump();
                        self.bump();
                        return Ok(Term::Quote(QuoteRef::Name(sym(&id))));
                    }
                }
                let saved = std::mem::take(&mut self.bound);
                let inner = self.formula();
                self.bound = saved;
                let inner = inner?;
                self.expect(Tok::Quote, "closing `'`")?;
                if !inner.is_closed() {
                    return Err(ParseError { pos, msg: "quoted formula must be closed".into() });
                }
                let env = self.env();
                Ok(env.quote(&env.canonical(&inner)))
            }
            Tok::Ident(id) => {
                if self.bound.contains(&id) {
                    return Ok(Term::Var(sym(&id)));
                }
                if self.env().constants.iter().any(|c| **c == *id) {
                    return Ok(Term::Const(sym(&id)));
                }
                let arity = self.env().functions.get(id.as_str()).copied();
                if arity.is_none() && *self.peek() != Tok::LParen {
                    if let EnvRef::Auto(env) = &mut self.env {
                        env.add_constant(&id).map_err(|e| ParseError { pos, msg: e.to_string() })?;
                        return Ok(Term::Const(sym(&id)));
                    }
                    return Err(ParseError { pos, msg: format!("unknown term `{}`", id) });
                }
                if arity.is_none() && matches!(self.env, EnvRef::Fixed(_)) {
                    return Err(ParseError { pos, msg: format!("unknown function `{}`", id) });
                }
                self.expect(Tok::LParen, "`(` after function symbol")?;
                let mut args = Vec::new();
                loop {
                    let t = self.term()?;
                    if matches!(t, Term::Quote(_)) {
                        return self.err(format!("function `{}` takes element terms, not quotations", id));
                    }
                    args.push(t);
                    if *self.peek() == Tok::Comma {
                        self.bump();
                    } else {
                        break;
                    }
                }
                self.expect(Tok::RParen, "`)`")?;
                match arity {
                    Some(a) if a != args.len() => Err(ParseError {
                        pos,
                        msg: format!("function `{}` expects {} argument(s), got {}", id, a, args.len()),
                    }),
                    Some(_) => Ok(Term::App(sym(&id), args)),
                    None => {
                        if let EnvRef::Auto(env) = &mut self.env {
                            env.add_function(&id, args.len()).map_err(|e| ParseError { pos, msg: e.to_string() })?;
                        }
                        Ok(Term::App(sym(&id), args))
                    }
                }
            }
            _ => {
                self.at -= 1;
                self.err("expected a term")
            }
        }
    }

    fn formula_list(&mut self, stop: &Tok) -> Result<Vec<Formula>, ParseError> {
        let mut out = Vec::new();
        if self.peek() == stop {
            return Ok(out);
        }
        loop {
            out.push(self.formula()?);
            if *self.peek() == Tok::Comma {
                self.bump();
            } else {
                return Ok(out);
            }
        }
    }
}

fn run<T>(
    text: &str,
    env: EnvRef<'_>,
    body: impl FnOnce(&mut Parser<'_>) -> Result<T, ParseError>,
) -> Result<T, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, at: 0, env, bound: Vec::new() };
    let out = body(&mut p)?;
    if *p.peek() != Tok::End {
        return p.err("unexpected trailing input");
    }
    Ok(out)
}

/// Parses a formula against a fixed vocabulary. Named sentences expand to
/// their definitions; free variables are rejected.
pub fn parse_formula(text: &str, env: &SentenceEnv) -> Result<Formula, ParseError> {
    run(text, EnvRef::Fixed(env), |p| p.formula())
}

/// Like [`parse_formula`], but unknown names are declared on the fly
/// (predicates in formula position, constants and functions in term position).
pub fn parse_formula_auto(text: &str, env: &mut SentenceEnv) -> Result<Formula, ParseError> {
    run(text, EnvRef::Auto(env), |p| p.formula())
}

/// Parses `G1, G2 => D1, D2`. With `auto`, unknown names are declared.
pub fn parse_sequent(
    text: &str,
    env: &mut SentenceEnv,
    auto: bool,
) -> Result<(Vec<Formula>, Vec<Formula>), ParseError> {
    let r = if auto { EnvRef::Auto(env) } else { EnvRef::Fixed(env) };
    run(text, r, |p| {
        let gamma = p.formula_list(&Tok::Turnstile)?;
        p.expect(Tok::Turnstile, "`=>`")?;
        let delta = p.formula_list(&Tok::End)?;
        Ok((gamma, delta))
    })
}

