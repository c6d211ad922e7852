use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_traits::Zero;
use thiserror::Error;

use super::{Expr, Func, Q};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at column {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown identifier `{name}` at column {pos}")]
    UnknownIdentifier { pos: usize, name: String },
}

impl ParseError {
    /// Zero-based byte offset of the error within the source.
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { pos, .. } | ParseError::UnknownIdentifier { pos, .. } => pos.saturating_sub(1),
        }
    }
}

/// Identifiers an expression may mention.
#[derive(Debug, Clone, Default)]
pub struct Symbols {
    names: BTreeSet<String>,
}

impl Symbols {
    pub fn new<I, S>(names: I) -> Symbols
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Symbols { names: names.into_iter().map(Into::into).collect() }
    }

    pub fn contains(&self, s: &str) -> bool {
        self.names.contains(s)
    }

    pub fn insert(&mut self, s: &str) {
        self.names.insert(s.to_string());
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(BigInt),
    Ident(String),
    Op(char),
    End,
}

struct Lexer {
    toks: Vec<(Tok, usize)>,
}

fn lex(src: &str) -> Result<Lexer, ParseError> {
    let mut toks = Vec::new();
    let bytes: Vec<char> = src.chars().collect();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let pos = i + 1;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == '.' || bytes[i] == 'e' || bytes[i] == 'E') {
                return Err(ParseError::Syntax {
                    pos: i + 1,
                    msg: "floating-point literals are not accepted; write an exact rational such as 3/2".into(),
                });
            }
            let s: String = bytes[start..i].iter().collect();
            toks.push((Tok::Int(s.parse().expect("digits")), pos));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == '_') {
                i += 1;
            }
            toks.push((Tok::Ident(bytes[start..i].iter().collect()), pos));
        } else if "+-*/^()".contains(c) {
            toks.push((Tok::Op(c), pos));
            i += 1;
        } else if c == '.' {
            return Err(ParseError::Syntax {
                pos,
                msg: "floating-point literals are not accepted; write an exact rational such as 3/2".into(),
            });
        } else {
            return Err(ParseError::Syntax { pos, msg: format!("unexpected character `{c}`") });
        }
    }
    toks.push((Tok::End, bytes.len() + 1));
    Ok(Lexer { toks })
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    at: usize,
    syms: &'a Symbols,
}

/// Parses `src` into a canonical expression.
///
/// The exponent after `^` is a rational literal (`x^1/2` is `x^(1/2)`), a
/// parenthesized signed rational, or a negated integer.
pub fn parse(src: &str, syms: &Symbols) -> Result<Expr, ParseError> {
    let lx = lex(src)?;
    let mut p = Parser { toks: lx.toks, at: 0, syms };
    let e = p.expr()?;
    match p.peek() {
        Tok::End => Ok(e),
        t => Err(p.err(format!("unexpected {}", describe(t)))),
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Int(v) => format!("number `{v}`"),
        Tok::Ident(s) => format!("identifier `{s}`"),
        Tok::Op(c) => format!("`{c}`"),
        Tok::End => "end of input".into(),
    }
}

impl Parser<'_> {
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

    fn err(&self, msg: String) -> ParseError {
        ParseError::Syntax { pos: self.pos(), msg }
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if *self.peek() == Tok::Op(c) {
            self.bump();
            Ok(())
        } else {
            Err(self.err(format!("expected `{c}`, found {}", describe(self.peek()))))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut terms = vec![self.term()?];
        loop {
            match self.peek() {
                Tok::Op('+') => {
                    self.bump();
                    terms.push(self.term()?);
                }
                Tok::Op('-') => {
                    self.bump();
                    terms.push(-self.term()?);
                }
                _ => break,
            }
        }
        Ok(Expr::add(terms))
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut factors = vec![self.signed_factor()?];
        loop {
            match self.peek() {
                Tok::Op('*') => {
                    self.bump();
                    factors.push(self.signed_factor()?);
                }
                Tok::Op('/') => {
                    let pos = self.pos();
                    self.bump();
                    let d = self.signed_factor()?;
                    if d.is_zero_node() {
                        return Err(ParseError::Syntax { pos, msg: "division by zero".into() });
                    }
                    factors.push(d.recip());
                }
                _ => break,
            }
        }
        Ok(Expr::mul(factors))
    }

    fn signed_factor(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Tok::Op('-') => {
                self.bump();
                Ok(-self.signed_factor()?)
            }
            Tok::Op('+') => {
                self.bump();
                self.signed_factor()
            }
            _ => self.factor(),
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let base = self.base()?;
        if *self.peek() == Tok::Op('^') {
            self.bump();
            let e = self.exponent()?;
            if base.is_zero_node() && e < Q::zero() {
                return Err(self.err("zero raised to a negative power".into()));
            }
            return Ok(Expr::pow(base, e));
        }
        Ok(base)
    }

    fn exponent(&mut self) -> Result<Q, ParseError> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                self.rational_tail(n)
            }
            Tok::Op('-') => {
                self.bump();
                match self.bump() {
                    Tok::Int(n) => Ok(-self.rational_tail(n)?),
                    t => Err(self.err(format!("expected exponent, found {}", describe(&t)))),
                }
            }
            Tok::Op('(') => {
                self.bump();
                let neg = match self.peek() {
                    Tok::Op('-') => {
                        self.bump();
                        true
                    }
                    Tok::Op('+') => {
                        self.bump();
                        false
                    }
                    _ => false,
                };
                let v = match self.bump() {
                    Tok::Int(n) => self.rational_tail(n)?,
                    t => return Err(self.err(format!("expected rational exponent, found {}", describe(&t)))),
                };
                self.expect(')')?;
                Ok(if neg { -v } else { v })
            }
            t => Err(self.err(format!("expected exponent, found {}", describe(&t)))),
        }
    }

    fn rational_tail(&mut self, n: BigInt) -> Result<Q, ParseError> {
        if *self.peek() == Tok::Op('/') {
            if let Tok::Int(d) = self.peek2().clone() {
                self.bump();
                let pos = self.pos();
                self.bump();
                if d.is_zero() {
                    return Err(ParseError::Syntax { pos, msg: "zero denominator".into() });
                }
                return Ok(Q::new(n, d));
            }
        }
        Ok(Q::from_integer(n))
    }

    fn base(&mut self) -> Result<Expr, ParseError> {
        let pos = self.pos();
        match self.bump() {
            Tok::Int(n) => Ok(Expr::num(Q::from_integer(n))),
            Tok::Op('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                let func = match name.as_str() {
                    "sqrt" => Some(None),
                    "exp" => Some(Some(Func::Exp)),
                    "ln" => Some(Some(Func::Ln)),
                    "sin" => Some(Some(Func::Sin)),
                    "cos" => Some(Some(Func::Cos)),
                    _ => None,
                };
                if let Some(f) = func {
                    self.expect('(')?;
                    let arg = self.expr()?;
                    self.expect(')')?;
                    return Ok(match f {
                        None => Expr::sqrt(arg),
                        Some(f) => Expr::func(f, arg),
                    });
                }
                if self.syms.contains(&name) {
                    Ok(Expr::sym(&name))
                } else {
                    Err(ParseError::UnknownIdentifier { pos, name })
                }
            }
            t => Err(ParseError::Syntax { pos, msg: format!("unexpected {}", describe(&t)) }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{q, Node};

    fn syms() -> Symbols {
        Symbols::new(["t", "x", "y", "z", "u", "v", "w", "ux", "uy", "uz"])
    }

    fn p(s: &str) -> Expr {
        parse(s, &syms()).unwrap()
    }

    #[test]
    fn product_of_declared_symbols() {
        assert_eq!(p("x*uy"), Expr::sym("x") * Expr::sym("uy"));
    }

    #[test]
    fn primes_are_not_grammatical() {
        assert!(matches!(parse("x*v'", &syms()), Err(ParseError::Syntax { .. })));
    }

    #[test]
    fn sqrt_becomes_half_power() {
        let e = p("sqrt(-2*ux+uz^2)");
        let base = Expr::int(-2) * Expr::sym("ux") + Expr::powi(Expr::sym("uz"), 2);
        assert_eq!(e, Expr::pow(base, q(1, 2)));
        assert!(matches!(e.node(), Node::Pow(_, _)));
    }

    #[test]
    fn identity_simplification() {
        assert_eq!(p("0*x + 1*t"), Expr::sym("t"));
    }

    #[test]
    fn rational_exponents() {
        assert_eq!(p("v^1/4"), Expr::pow(Expr::sym("v"), q(1, 4)));
        assert_eq!(p("v^(-3/4)"), Expr::pow(Expr::sym("v"), q(-3, 4)));
        assert_eq!(p("v^-2"), Expr::powi(Expr::sym("v"), -2));
        assert_eq!(p("v^2/x"), Expr::powi(Expr::sym("v"), 2) / Expr::sym("x"));
    }

    #[test]
    fn unary_minus_and_rationals() {
        assert_eq!(p("-1/2"), Expr::rational(-1, 2));
        assert_eq!(p("--x"), Expr::sym("x"));
        assert_eq!(p("x - -x"), Expr::int(2) * Expr::sym("x"));
    }

    #[test]
    fn errors_carry_positions() {
        assert_eq!(
            parse("x + q", &syms()),
            Err(ParseError::UnknownIdentifier { pos: 5, name: "q".into() })
        );
        assert!(matches!(parse("1.5*x", &syms()), Err(ParseError::Syntax { pos: 2, .. })));
        assert!(matches!(parse("(x", &syms()), Err(ParseError::Syntax { .. })));
        assert!(matches!(parse("x/0", &syms()), Err(ParseError::Syntax { .. })));
    }
}
