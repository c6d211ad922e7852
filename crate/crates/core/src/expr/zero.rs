use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{rnf, Expr, Point};

/// Closed sampling interval per symbol.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DomainBox {
    pub intervals: Vec<(String, f64, f64)>,
}

impl DomainBox {
    pub fn new(intervals: Vec<(String, f64, f64)>) -> DomainBox {
        DomainBox { intervals }
    }

    pub fn interval(&self, name: &str) -> Option<(f64, f64)> {
        self.intervals.iter().find(|(n, _, _)| n == name).map(|(_, lo, hi)| (*lo, *hi))
    }

    /// Lower-left corner, used as a deterministic fallback point.
    pub fn corner(&self) -> Point {
        self.intervals.iter().map(|(n, lo, _)| (n.clone(), *lo)).collect()
    }

    pub fn midpoint(&self) -> Point {
        self.intervals.iter().map(|(n, lo, hi)| (n.clone(), 0.5 * (lo + hi))).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ZeroVerdict {
    Zero,
    NonZero,
    Inconclusive,
}

/// Which tier of the zero test settled the verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ZeroPath {
    /// The canonical form is the zero node.
    Structural,
    /// Numerically small everywhere and the rational normal form vanishes.
    Symbolic,
    /// A sample point exceeded the threshold.
    Numeric,
    /// Numerically small, but no symbolic confirmation.
    Unresolved,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub point: Point,
    pub value: f64,
    pub atol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroTest {
    pub verdict: ZeroVerdict,
    pub path: ZeroPath,
    pub witness: Option<Witness>,
}

impl ZeroTest {
    pub fn is_zero(&self) -> bool {
        self.verdict == ZeroVerdict::Zero
    }

    pub fn is_nonzero(&self) -> bool {
        self.verdict == ZeroVerdict::NonZero
    }
}

pub const DEFAULT_SAMPLES: usize = 16;
pub const RELATIVE_ATOL: f64 = 1e-9;

/// Sample points and settings for zero tests on one domain.
#[derive(Debug, Clone)]
pub struct ZeroContext {
    pub domain: DomainBox,
    pub seed: u64,
    points: Vec<Point>,
}

impl ZeroContext {
    pub fn new(domain: DomainBox, samples: usize, seed: u64) -> ZeroContext {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points = (0..samples.max(1))
            .map(|_| {
                domain
                    .intervals
                    .iter()
                    .map(|(n, lo, hi)| (n.clone(), if hi > lo { rng.random_range(*lo..=*hi) } else { *lo }))
                    .collect()
            })
            .collect();
        ZeroContext { domain, seed, points }
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    /// Three-tier zero test: structural, numeric probing, then rational normal form.
    pub fn is_zero(&self, e: &Expr) -> ZeroTest {
        if e.is_zero_node() {
            return ZeroTest { verdict: ZeroVerdict::Zero, path: ZeroPath::Structural, witness: None };
        }
        let mut valid = 0usize;
        let mut borderline = false;
        for pt in &self.points {
            let mut scale = 0.0;
            let Ok(v) = e.eval_tracked(pt, &mut scale) else { continue };
            valid += 1;
            let atol = RELATIVE_ATOL * (1.0 + scale);
            if v.abs() > 10.0 * atol {
                return ZeroTest {
                    verdict: ZeroVerdict::NonZero,
                    path: ZeroPath::Numeric,
                    witness: Some(Witness { point: pt.clone(), value: v, atol }),
                };
            }
            if v.abs() >= atol {
                borderline = true;
            }
        }
        if valid == 0 || borderline {
            return ZeroTest { verdict: ZeroVerdict::Inconclusive, path: ZeroPath::Unresolved, witness: None };
        }
        if rnf::normal_form_is_zero(e) {
            ZeroTest { verdict: ZeroVerdict::Zero, path: ZeroPath::Symbolic, witness: None }
        } else {
            ZeroTest { verdict: ZeroVerdict::Inconclusive, path: ZeroPath::Unresolved, witness: None }
        }
    }

    /// First sample point at which `e` evaluates.
    pub fn sample_value(&self, e: &Expr) -> Option<(Point, f64)> {
        self.points.iter().find_map(|p| e.eval(p).ok().map(|v| (p.clone(), v)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, Symbols};

    fn ctx(vars: &[(&str, f64, f64)]) -> ZeroContext {
        ZeroContext::new(DomainBox::new(vars.iter().map(|(n, a, b)| (n.to_string(), *a, *b)).collect()), 16, 0)
    }

    fn p(s: &str) -> Expr {
        parse(s, &Symbols::new(["t", "u", "v", "w", "x"])).unwrap()
    }

    #[test]
    fn structural_zero() {
        let z = ctx(&[("u", 0.0, 1.0), ("v", 0.0, 1.0)]).is_zero(&p("(u+v) - (v+u)"));
        assert_eq!((z.verdict, z.path), (ZeroVerdict::Zero, ZeroPath::Structural));
    }

    #[test]
    fn quartic_root_is_nonzero() {
        let z = ctx(&[("v", 1.0, 4.0)]).is_zero(&p("-v^(1/4)"));
        assert_eq!(z.verdict, ZeroVerdict::NonZero);
        assert!(z.witness.unwrap().value < 0.0);
    }

    #[test]
    fn pythagorean_identity_is_symbolic() {
        let z = ctx(&[("t", -3.0, 3.0)]).is_zero(&p("sin(t)^2 + cos(t)^2 - 1"));
        assert_eq!((z.verdict, z.path), (ZeroVerdict::Zero, ZeroPath::Symbolic));
    }

    #[test]
    fn tiny_but_nonzero_is_not_zero() {
        let z = ctx(&[("t", 1.0, 2.0)]).is_zero(&p("t/10000000000000"));
        assert_ne!(z.verdict, ZeroVerdict::Zero);
    }

    #[test]
    fn no_valid_point_is_inconclusive() {
        let z = ctx(&[("v", -2.0, -1.0)]).is_zero(&p("ln(v) - 1"));
        assert_eq!(z.verdict, ZeroVerdict::Inconclusive);
    }

    #[test]
    fn same_seed_same_points() {
        let a = ctx(&[("t", 0.0, 1.0)]);
        let b = ctx(&[("t", 0.0, 1.0)]);
        assert_eq!(a.points(), b.points());
    }
}
