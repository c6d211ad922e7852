//! Symbolic expressions over exact rationals.
//!
//! Every constructor returns a canonical form: sums and products are
//! flattened, like terms and like bases are collected, constants are folded,
//! and operands are kept in the derived total order of [`Node`].

mod diff;
mod eval;
mod parse;
mod print;
pub mod rnf;
mod zero;

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub use eval::{EvalError, Point};
pub use parse::{parse, ParseError, Symbols};
pub use zero::{DomainBox, Witness, ZeroContext, ZeroPath, ZeroTest, ZeroVerdict, DEFAULT_SAMPLES, RELATIVE_ATOL};

pub type Q = BigRational;

/// Unary functions. `sqrt` is not a variant: it is stored as a power.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Func {
    Exp,
    Ln,
    Sin,
    Cos,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sin => "sin",
            Func::Cos => "cos",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Node {
    Num(Q),
    Sym(Arc<str>),
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    Pow(Expr, Q),
    Fn(Func, Expr),
}

/// Immutable, cheaply clonable expression handle.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Expr(Arc<Node>);

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

impl Expr {
    fn raw(node: Node) -> Expr {
        Expr(Arc::new(node))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn num(v: Q) -> Expr {
        Expr::raw(Node::Num(v))
    }

    pub fn int(v: i64) -> Expr {
        Expr::num(qi(v))
    }

    pub fn rational(n: i64, d: i64) -> Expr {
        Expr::num(q(n, d))
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn sym(name: &str) -> Expr {
        Expr::raw(Node::Sym(Arc::from(name)))
    }

    pub fn as_num(&self) -> Option<&Q> {
        match self.node() {
            Node::Num(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_sym(&self) -> Option<&str> {
        match self.node() {
            Node::Sym(s) => Some(s),
            _ => None,
        }
    }

    pub fn is_zero_node(&self) -> bool {
        matches!(self.node(), Node::Num(v) if v.is_zero())
    }

    pub fn is_one_node(&self) -> bool {
        matches!(self.node(), Node::Num(v) if v.is_one())
    }

    pub fn sqrt(e: Expr) -> Expr {
        Expr::pow(e, q(1, 2))
    }

    pub fn func(f: Func, arg: Expr) -> Expr {
        match (f, arg.node()) {
            (Func::Exp, Node::Num(v)) if v.is_zero() => Expr::one(),
            (Func::Ln, Node::Num(v)) if v.is_one() => Expr::zero(),
            (Func::Sin, Node::Num(v)) if v.is_zero() => Expr::zero(),
            (Func::Cos, Node::Num(v)) if v.is_zero() => Expr::one(),
            (Func::Exp, Node::Fn(Func::Ln, inner)) => inner.clone(),
            (Func::Ln, Node::Fn(Func::Exp, inner)) => inner.clone(),
            _ => Expr::raw(Node::Fn(f, arg)),
        }
    }

    /// Splits a term into its rational coefficient and the remaining factor.
    pub(crate) fn split_coef(&self) -> (Q, Expr) {
        match self.node() {
            Node::Num(v) => (v.clone(), Expr::one()),
            Node::Mul(fs) => match fs[0].node() {
                Node::Num(c) => {
                    let rest = if fs.len() == 2 {
                        fs[1].clone()
                    } else {
                        Expr::raw(Node::Mul(fs[1..].to_vec()))
                    };
                    (c.clone(), rest)
                }
                _ => (Q::one(), self.clone()),
            },
            _ => (Q::one(), self.clone()),
        }
    }

    /// Rebuilds `coef * rest` where `rest` is already canonical and coefficient-free.
    fn with_coef(coef: Q, rest: Expr) -> Expr {
        if coef.is_zero() {
            return Expr::zero();
        }
        if rest.is_one_node() {
            return Expr::num(coef);
        }
        if coef.is_one() {
            return rest;
        }
        match rest.node() {
            Node::Mul(fs) => {
                let mut v = Vec::with_capacity(fs.len() + 1);
                v.push(Expr::num(coef));
                v.extend(fs.iter().cloned());
                Expr::raw(Node::Mul(v))
            }
            Node::Add(_) => Expr::mul(vec![Expr::num(coef), rest]),
            _ => Expr::raw(Node::Mul(vec![Expr::num(coef), rest])),
        }
    }

    pub fn add(terms: Vec<Expr>) -> Expr {
        let mut acc: BTreeMap<Expr, Q> = BTreeMap::new();
        let push = |t: &Expr, acc: &mut BTreeMap<Expr, Q>| {
            let (c, rest) = t.split_coef();
            let slot = acc.entry(rest).or_insert_with(Q::zero);
            *slot += c;
        };
        for t in &terms {
            match t.node() {
                Node::Add(inner) => inner.iter().for_each(|s| push(s, &mut acc)),
                _ => push(t, &mut acc),
            }
        }
        let mut out: Vec<Expr> = acc
            .into_iter()
            .filter(|(_, c)| !c.is_zero())
            .map(|(rest, c)| Expr::with_coef(c, rest))
            .collect();
        match out.len() {
            0 => Expr::zero(),
            1 => out.pop().unwrap(),
            _ => {
                out.sort();
                Expr::raw(Node::Add(out))
            }
        }
    }

    pub fn mul(factors: Vec<Expr>) -> Expr {
        let mut coef = Q::one();
        let mut bases: BTreeMap<Expr, Q> = BTreeMap::new();
        let mut stack: Vec<Expr> = factors;
        while let Some(f) = stack.pop() {
            match f.node() {
                Node::Num(v) => coef *= v,
                Node::Mul(inner) => stack.extend(inner.iter().cloned()),
                Node::Pow(b, e) => *bases.entry(b.clone()).or_insert_with(Q::zero) += e,
                _ => *bases.entry(f.clone()).or_insert_with(Q::zero) += Q::one(),
            }
        }
        if coef.is_zero() {
            return Expr::zero();
        }
        let mut out: Vec<Expr> = Vec::new();
        let mut refold = false;
        for (b, e) in bases {
            if e.is_zero() {
                continue;
            }
            let p = Expr::pow(b, e);
            match p.node() {
                Node::Num(v) => coef *= v,
                Node::Mul(_) => {
                    refold = true;
                    out.push(p);
                }
                _ => out.push(p),
            }
        }
        if refold {
            out.push(Expr::num(coef));
            return Expr::mul(out);
        }
        if out.is_empty() {
            return Expr::num(coef);
        }
        if out.len() == 1 {
            let only = out.pop().unwrap();
            if coef.is_one() {
                return only;
            }
            if let Node::Add(ts) = only.node() {
                return Expr::add(ts.iter().map(|t| Expr::mul(vec![Expr::num(coef.clone()), t.clone()])).collect());
            }
            return Expr::raw(Node::Mul(vec![Expr::num(coef), only]));
        }
        out.sort();
        if !coef.is_one() {
            out.insert(0, Expr::num(coef));
        }
        Expr::raw(Node::Mul(out))
    }

    pub fn pow(base: Expr, e: Q) -> Expr {
        if e.is_zero() {
            return Expr::one();
        }
        if e.is_one() {
            return base;
        }
        match base.node() {
            Node::Num(c) => num_pow(c, &e),
            Node::Pow(b, e1) => {
                if e.is_integer() || e1.numer().is_odd() {
                    Expr::pow(b.clone(), e1 * &e)
                } else {
                    Expr::raw(Node::Pow(base.clone(), e))
                }
            }
            Node::Mul(fs) => {
                let coef_ok = match fs[0].node() {
                    Node::Num(c) => c.is_positive(),
                    _ => true,
                };
                if e.is_integer() || coef_ok {
                    Expr::mul(fs.iter().map(|f| Expr::pow(f.clone(), e.clone())).collect())
                } else {
                    Expr::raw(Node::Pow(base.clone(), e))
                }
            }
            _ => Expr::raw(Node::Pow(base.clone(), e)),
        }
    }

    pub fn powi(base: Expr, n: i64) -> Expr {
        Expr::pow(base, qi(n))
    }

    pub fn recip(&self) -> Expr {
        Expr::powi(self.clone(), -1)
    }

    /// Rebuilds the tree bottom-up through the canonicalizing constructors.
    pub fn recanon(&self) -> Expr {
        match self.node() {
            Node::Num(_) | Node::Sym(_) => self.clone(),
            Node::Add(ts) => Expr::add(ts.iter().map(Expr::recanon).collect()),
            Node::Mul(fs) => Expr::mul(fs.iter().map(Expr::recanon).collect()),
            Node::Pow(b, e) => Expr::pow(b.recanon(), e.clone()),
            Node::Fn(f, a) => Expr::func(*f, a.recanon()),
        }
    }

    /// Simultaneous substitution of symbols.
    pub fn subs(&self, bindings: &BTreeMap<String, Expr>) -> Expr {
        match self.node() {
            Node::Num(_) => self.clone(),
            Node::Sym(s) => bindings.get(&**s).cloned().unwrap_or_else(|| self.clone()),
            Node::Add(ts) => Expr::add(ts.iter().map(|t| t.subs(bindings)).collect()),
            Node::Mul(fs) => Expr::mul(fs.iter().map(|f| f.subs(bindings)).collect()),
            Node::Pow(b, e) => Expr::pow(b.subs(bindings), e.clone()),
            Node::Fn(f, a) => Expr::func(*f, a.subs(bindings)),
        }
    }

    pub fn free_symbols(&self) -> std::collections::BTreeSet<String> {
        let mut out = std::collections::BTreeSet::new();
        self.collect_symbols(&mut out);
        out
    }

    fn collect_symbols(&self, out: &mut std::collections::BTreeSet<String>) {
        match self.node() {
            Node::Num(_) => {}
            Node::Sym(s) => {
                out.insert(s.to_string());
            }
            Node::Add(xs) | Node::Mul(xs) => xs.iter().for_each(|x| x.collect_symbols(out)),
            Node::Pow(b, _) | Node::Fn(_, b) => b.collect_symbols(out),
        }
    }

    pub fn depends_on(&self, s: &str) -> bool {
        match self.node() {
            Node::Num(_) => false,
            Node::Sym(n) => &**n == s,
            Node::Add(xs) | Node::Mul(xs) => xs.iter().any(|x| x.depends_on(s)),
            Node::Pow(b, _) | Node::Fn(_, b) => b.depends_on(s),
        }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        match self.node() {
            Node::Num(_) | Node::Sym(_) => 1,
            Node::Add(xs) | Node::Mul(xs) => 1 + xs.iter().map(Expr::size).sum::<usize>(),
            Node::Pow(b, _) | Node::Fn(_, b) => 1 + b.size(),
        }
    }

    /// Rational normal form round trip; see [`rnf`].
    pub fn simplify(&self) -> Expr {
        rnf::simplify(self)
    }
}

fn exact_root(n: &BigInt, k: u32) -> Option<BigInt> {
    if n.is_negative() {
        return None;
    }
    let r = n.nth_root(k);
    if r.pow(k) == *n {
        Some(r)
    } else {
        None
    }
}

fn num_pow(c: &Q, e: &Q) -> Expr {
    if e.is_integer() {
        let k = e.to_integer().to_i32();
        return match k {
            Some(k) if !(c.is_zero() && k < 0) && k.unsigned_abs() <= 4096 => Expr::num(rnf::qpow(c, k as i64)),
            _ => Expr::raw(Node::Pow(Expr::num(c.clone()), e.clone())),
        };
    }
    if c.is_zero() && e.is_positive() {
        return Expr::zero();
    }
    if c.is_one() {
        return Expr::one();
    }
    let den = e.denom().to_u32();
    let Some(den) = den else {
        return Expr::raw(Node::Pow(Expr::num(c.clone()), e.clone()));
    };
    if c.is_negative() {
        if den % 2 == 1 {
            let sign = if e.numer().is_odd() { -1 } else { 1 };
            return Expr::mul(vec![Expr::int(sign), num_pow(&-c, e)]);
        }
        return Expr::raw(Node::Pow(Expr::num(c.clone()), e.clone()));
    }
    if let (Some(a), Some(b)) = (exact_root(c.numer(), den), exact_root(c.denom(), den)) {
        return num_pow(&Q::new(a, b), &Q::from_integer(e.numer().clone()));
    }
    // c^(k + f) = c^k * c^f with 0 < f < 1
    let k = e.floor();
    let f = e - &k;
    let whole = num_pow(c, &k);
    let frac = Expr::raw(Node::Pow(Expr::num(c.clone()), f));
    match whole.as_num() {
        Some(w) if w.is_one() => frac,
        Some(w) => Expr::raw(Node::Mul(vec![Expr::num(w.clone()), frac])),
        None => Expr::mul(vec![whole, frac]),
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print::to_string(self))
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({})", self)
    }
}

impl From<i64> for Expr {
    fn from(v: i64) -> Expr {
        Expr::int(v)
    }
}

impl From<Q> for Expr {
    fn from(v: Q) -> Expr {
        Expr::num(v)
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident, $body:expr) => {
        impl $tr<Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self, rhs)
            }
        }
        impl $tr<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self, rhs.clone())
            }
        }
        impl $tr<Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self.clone(), rhs)
            }
        }
        impl $tr<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self.clone(), rhs.clone())
            }
        }
    };
}

binop!(Add, add, |a, b| Expr::add(vec![a, b]));
binop!(Sub, sub, |a, b| Expr::add(vec![a, Expr::mul(vec![Expr::int(-1), b])]));
binop!(Mul, mul, |a, b| Expr::mul(vec![a, b]));
binop!(Div, div, |a, b| Expr::mul(vec![a, Expr::powi(b, -1)]));

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::mul(vec![Expr::int(-1), self])
    }
}

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -(self.clone())
    }
}

impl std::iter::Sum for Expr {
    fn sum<I: Iterator<Item = Expr>>(iter: I) -> Expr {
        Expr::add(iter.collect())
    }
}

impl std::iter::Product for Expr {
    fn product<I: Iterator<Item = Expr>>(iter: I) -> Expr {
        Expr::mul(iter.collect())
    }
}
