use std::collections::BTreeMap;

use num_traits::{Signed, ToPrimitive};
use thiserror::Error;

use super::{Expr, Func, Node, Q};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("no value bound for `{0}`")]
    Unbound(String),
}

/// Numeric values for symbols.
pub type Point = BTreeMap<String, f64>;

pub(crate) fn q_to_f64(v: &Q) -> f64 {
    v.to_f64().unwrap_or_else(|| {
        let n = v.numer().to_f64().unwrap_or(f64::NAN);
        let d = v.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

impl Expr {
    /// IEEE double value of the expression at `point`.
    pub fn eval(&self, point: &Point) -> Result<f64, EvalError> {
        let mut scale = 0.0;
        self.eval_tracked(point, &mut scale)
    }

    /// Like [`Expr::eval`], also recording the largest intermediate magnitude.
    pub fn eval_tracked(&self, point: &Point, scale: &mut f64) -> Result<f64, EvalError> {
        let v = match self.node() {
            Node::Num(v) => q_to_f64(v),
            Node::Sym(s) => *point.get(&**s).ok_or_else(|| EvalError::Unbound(s.to_string()))?,
            Node::Add(ts) => {
                let mut acc = 0.0;
                for t in ts {
                    acc += t.eval_tracked(point, scale)?;
                }
                acc
            }
            Node::Mul(fs) => {
                let mut acc = 1.0;
                for f in fs {
                    acc *= f.eval_tracked(point, scale)?;
                }
                acc
            }
            Node::Pow(b, e) => {
                let bv = b.eval_tracked(point, scale)?;
                real_pow(bv, e)?
            }
            Node::Fn(f, a) => {
                let av = a.eval_tracked(point, scale)?;
                match f {
                    Func::Exp => av.exp(),
                    Func::Ln => {
                        if av <= 0.0 {
                            return Err(EvalError::Domain(format!("ln of non-positive value {av}")));
                        }
                        av.ln()
                    }
                    Func::Sin => av.sin(),
                    Func::Cos => av.cos(),
                }
            }
        };
        if !v.is_finite() {
            return Err(EvalError::Domain(format!("non-finite value while evaluating {self}")));
        }
        if v.abs() > *scale {
            *scale = v.abs();
        }
        Ok(v)
    }
}

fn real_pow(b: f64, e: &Q) -> Result<f64, EvalError> {
    if b == 0.0 && e.is_negative() {
        return Err(EvalError::Domain("division by zero".into()));
    }
    if e.is_integer() {
        let k = e.numer().to_i32().ok_or_else(|| EvalError::Domain("exponent too large".into()))?;
        return Ok(b.powi(k));
    }
    let ef = q_to_f64(e);
    if b >= 0.0 {
        return Ok(b.powf(ef));
    }
    let odd_den = e.denom().to_u64().map(|d| d % 2 == 1).unwrap_or(false);
    if odd_den {
        let mag = (-b).powf(ef);
        let odd_num = e.numer().to_i64().map(|n| n % 2 != 0).unwrap_or(false);
        Ok(if odd_num { -mag } else { mag })
    } else {
        Err(EvalError::Domain(format!("even root of negative value {b}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, Symbols};

    fn p(s: &str) -> Expr {
        parse(s, &Symbols::new(["t", "u", "v", "w"])).unwrap()
    }

    fn at(pairs: &[(&str, f64)]) -> Point {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn basic_values() {
        assert_eq!(p("t").eval(&at(&[("t", 5.0)])).unwrap(), 5.0);
        assert_eq!(p("-sqrt(v)/(4*v)").eval(&at(&[("v", 4.0)])).unwrap(), -0.125);
        let r = p("(-2*u+w^2)^(1/2)").eval(&at(&[("u", -1.0), ("w", 0.0)])).unwrap();
        assert!((r - std::f64::consts::SQRT_2).abs() < 1e-15);
        assert_eq!(p("-v/(3*u^2)").eval(&at(&[("u", 1.0), ("v", 3.0)])).unwrap(), -1.0);
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(p("sqrt(v)").eval(&at(&[("v", -1.0)])), Err(EvalError::Domain(_))));
        assert!(matches!(p("ln(v)").eval(&at(&[("v", 0.0)])), Err(EvalError::Domain(_))));
        assert!(matches!(p("1/v").eval(&at(&[("v", 0.0)])), Err(EvalError::Domain(_))));
        assert!(matches!(p("v").eval(&at(&[])), Err(EvalError::Unbound(_))));
    }

    #[test]
    fn odd_roots_of_negatives() {
        let e = Expr::pow(Expr::sym("v"), crate::expr::q(2, 3));
        assert!((e.eval(&at(&[("v", -8.0)])).unwrap() - 4.0).abs() < 1e-12);
    }
}
