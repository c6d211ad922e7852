//! Geometry of a system of second-order ODEs on the evolution space `(t, x^a, u^a)`.

use thiserror::Error;

use crate::expr::{Expr, Symbols, ZeroContext};
use crate::forms::{combinations, Frame};

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("expected {expected} right-hand sides, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("right-hand side {index} mentions undeclared symbol `{name}`")]
    UndeclaredSymbol { index: usize, name: String },
    #[error("dimension must be at least 1")]
    EmptySystem,
}

/// `ẍ^a = F^a(t, x, ẋ)` together with the sampling domain.
#[derive(Debug, Clone)]
pub struct Sode {
    pub n: usize,
    pub time: String,
    pub coords: Vec<String>,
    pub vels: Vec<String>,
    pub params: Vec<String>,
    pub f: Vec<Expr>,
    pub zctx: ZeroContext,
}

impl Sode {
    pub fn new(
        coords: Vec<String>,
        vels: Vec<String>,
        params: Vec<String>,
        f: Vec<Expr>,
        zctx: ZeroContext,
    ) -> Result<Sode, GeometryError> {
        let n = coords.len();
        if n == 0 {
            return Err(GeometryError::EmptySystem);
        }
        for len in [vels.len(), f.len()] {
            if len != n {
                return Err(GeometryError::DimensionMismatch { expected: n, found: len });
            }
        }
        let sode = Sode { n, time: "t".into(), coords, vels, params, f, zctx };
        let syms = sode.symbols();
        for (i, fa) in sode.f.iter().enumerate() {
            if let Some(bad) = fa.free_symbols().into_iter().find(|s| !syms.contains(s)) {
                return Err(GeometryError::UndeclaredSymbol { index: i + 1, name: bad });
            }
        }
        Ok(sode)
    }

    /// `t, x^1..x^n, u^1..u^n` in that order.
    pub fn all_coords(&self) -> Vec<String> {
        let mut v = vec![self.time.clone()];
        v.extend(self.coords.iter().cloned());
        v.extend(self.vels.iter().cloned());
        v
    }

    pub fn symbols(&self) -> Symbols {
        let mut s = Symbols::new(self.all_coords());
        for p in &self.params {
            s.insert(p);
        }
        s
    }

    pub fn x(&self, a: usize) -> Expr {
        Expr::sym(&self.coords[a])
    }

    pub fn u(&self, a: usize) -> Expr {
        Expr::sym(&self.vels[a])
    }
}

/// Which frame field to differentiate along.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameField {
    Gamma,
    H(usize),
    V(usize),
}

/// Connection, Jacobi endomorphism, curvature and the adapted frame of a [`Sode`].
#[derive(Debug, Clone)]
pub struct Geometry {
    pub sode: Sode,
    /// `gamma[a][b] = Γ^a_b`.
    pub gamma: Vec<Vec<Expr>>,
    /// `phi[a][b] = Φ^a_b`.
    pub phi: Vec<Vec<Expr>>,
    /// `R^d_{ab}` for `a < b`, indexed `[d][pair]` with pairs in lexicographic order.
    r: Vec<Vec<Expr>>,
    /// Frame `{Γ, H_a, V_a}` dual to `{dt, θ^a, ψ^a}`; index 0, then `1..=n`, then `n+1..=2n`.
    pub frame: Frame,
}

fn pair_index(n: usize, a: usize, b: usize) -> usize {
    combinations(n, 2).iter().position(|p| p[0] == a && p[1] == b).expect("pair")
}

impl Geometry {
    pub fn new(sode: Sode) -> Geometry {
        let n = sode.n;
        let gamma: Vec<Vec<Expr>> = (0..n)
            .map(|a| (0..n).map(|b| (Expr::rational(-1, 2) * sode.f[a].diff(&sode.vels[b])).simplify()).collect())
            .collect();
        let frame = standard_frame(&sode, &gamma);
        let mut geo = Geometry { sode, gamma, phi: Vec::new(), r: Vec::new(), frame };
        geo.phi = geo.jacobi_endomorphism();
        geo.r = geo.curvature_table();
        geo
    }

    pub fn n(&self) -> usize {
        self.sode.n
    }

    pub fn dim(&self) -> usize {
        2 * self.n() + 1
    }

    /// Frame index of `H_a` (and `θ^a`).
    pub fn h_index(&self, a: usize) -> usize {
        1 + a
    }

    /// Frame index of `V_a` (and `ψ^a`).
    pub fn v_index(&self, a: usize) -> usize {
        1 + self.n() + a
    }

    pub fn frame_derivative(&self, f: &Expr, which: FrameField) -> Expr {
        let i = match which {
            FrameField::Gamma => 0,
            FrameField::H(a) => self.h_index(a),
            FrameField::V(a) => self.v_index(a),
        };
        self.frame.apply(i, f).simplify()
    }

    /// `Φ^a_b = -∂F^a/∂x^b - Γ^c_b Γ^a_c - Γ(Γ^a_b)`.
    fn jacobi_endomorphism(&self) -> Vec<Vec<Expr>> {
        let n = self.n();
        (0..n)
            .map(|a| {
                (0..n)
                    .map(|b| {
                        let mut terms = vec![-self.sode.f[a].diff(&self.sode.coords[b])];
                        for c in 0..n {
                            terms.push(-(&self.gamma[c][b] * &self.gamma[a][c]));
                        }
                        terms.push(-self.frame.apply(0, &self.gamma[a][b]));
                        Expr::add(terms).simplify()
                    })
                    .collect()
            })
            .collect()
    }

    fn curvature_table(&self) -> Vec<Vec<Expr>> {
        let n = self.n();
        let s = &self.sode;
        let pairs = combinations(n, 2);
        (0..n)
            .map(|d| {
                pairs
                    .iter()
                    .map(|p| {
                        let (a, b) = (p[0], p[1]);
                        let fd = &s.f[d];
                        let mut terms = vec![
                            fd.diff(&s.coords[a]).diff(&s.vels[b]),
                            -fd.diff(&s.coords[b]).diff(&s.vels[a]),
                        ];
                        for c in 0..n {
                            let fcu = fd.diff(&s.vels[c]);
                            terms.push(Expr::rational(1, 2) * s.f[c].diff(&s.vels[a]) * fcu.diff(&s.vels[b]));
                            terms.push(Expr::rational(-1, 2) * s.f[c].diff(&s.vels[b]) * fcu.diff(&s.vels[a]));
                        }
                        (Expr::rational(1, 2) * Expr::add(terms)).simplify()
                    })
                    .collect()
            })
            .collect()
    }

    /// `R^d_{ab}`, antisymmetric in `(a, b)`.
    pub fn curvature(&self, d: usize, a: usize, b: usize) -> Expr {
        use std::cmp::Ordering;
        match a.cmp(&b) {
            Ordering::Equal => Expr::zero(),
            Ordering::Less => self.r[d][pair_index(self.n(), a, b)].clone(),
            Ordering::Greater => -self.r[d][pair_index(self.n(), b, a)].clone(),
        }
    }

    pub fn zctx(&self) -> &ZeroContext {
        &self.sode.zctx
    }
}

/// `{Γ, H_a, V_a}` and `{dt, θ^a, ψ^a}` in coordinates `(t, x, u)`.
fn standard_frame(sode: &Sode, gamma: &[Vec<Expr>]) -> Frame {
    let n = sode.n;
    let dim = 2 * n + 1;
    let unit = |i: usize| -> Vec<Expr> { (0..dim).map(|j| if i == j { Expr::one() } else { Expr::zero() }).collect() };
    let mut names = vec!["Gamma".to_string()];
    names.extend((0..n).map(|a| format!("H{}", a + 1)));
    names.extend((0..n).map(|a| format!("V{}", a + 1)));

    let mut vectors = Vec::with_capacity(dim);
    let mut g = vec![Expr::one()];
    g.extend((0..n).map(|a| sode.u(a)));
    g.extend(sode.f.iter().cloned());
    vectors.push(g);
    for a in 0..n {
        let mut h = unit(1 + a);
        for b in 0..n {
            h[1 + n + b] = -gamma[b][a].clone();
        }
        vectors.push(h);
    }
    for a in 0..n {
        vectors.push(unit(1 + n + a));
    }

    let mut covectors = vec![unit(0)];
    for a in 0..n {
        let mut th = unit(1 + a);
        th[0] = -sode.u(a);
        covectors.push(th);
    }
    for a in 0..n {
        let mut ps = unit(1 + n + a);
        let mut t0 = vec![-sode.f[a].clone()];
        for b in 0..n {
            t0.push(-(&gamma[a][b] * sode.u(b)));
            ps[1 + b] = gamma[a][b].clone();
        }
        ps[0] = Expr::add(t0);
        covectors.push(ps);
    }
    Frame::from_brackets(names, sode.all_coords(), vectors, covectors)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::expr::{parse, DomainBox, ZeroVerdict};
    use crate::forms::{pair_with, Form};

    pub(crate) fn sode(xs: &[&str], us: &[&str], f: &[&str], boxes: &[(&str, f64, f64)]) -> Sode {
        let mut names = vec!["t".to_string()];
        names.extend(xs.iter().map(|s| s.to_string()));
        names.extend(us.iter().map(|s| s.to_string()));
        let syms = Symbols::new(names.clone());
        let f = f.iter().map(|s| parse(s, &syms).unwrap()).collect();
        // Unlisted variables sample from [1, 2].
        let dbox = DomainBox::new(
            names
                .iter()
                .map(|n| match boxes.iter().find(|(b, _, _)| b == n) {
                    Some((_, lo, hi)) => (n.clone(), *lo, *hi),
                    None => (n.clone(), 1.0, 2.0),
                })
                .collect(),
        );
        Sode::new(
            xs.iter().map(|s| s.to_string()).collect(),
            us.iter().map(|s| s.to_string()).collect(),
            vec![],
            f,
            ZeroContext::new(dbox, 16, 0),
        )
        .unwrap()
    }

    fn full_box(lo: f64, hi: f64) -> Vec<(&'static str, f64, f64)> {
        ["t", "x", "y", "z", "u", "v", "w"].iter().map(|n| (*n, lo, hi)).collect()
    }

    fn p(s: &str) -> Expr {
        parse(s, &Symbols::new(["t", "x", "y", "z", "u", "v", "w"])).unwrap()
    }

    #[test]
    fn frame_duality() {
        let g = Geometry::new(sode(&["x", "y"], &["u", "v"], &["x*v^2", "t*u"], &full_box(1.0, 2.0)));
        for (i, c) in g.frame.covectors.iter().enumerate() {
            for (j, v) in g.frame.vectors.iter().enumerate() {
                let expect = if i == j { Expr::one() } else { Expr::zero() };
                assert_eq!(pair_with(c, v).simplify(), expect, "<e^{i}, E_{j}>");
            }
        }
    }

    #[test]
    fn frame_derivatives_of_t() {
        let g = Geometry::new(sode(&["x", "y", "z"], &["u", "v", "w"], &["z*t", "0", "x"], &full_box(1.0, 4.0)));
        let t = p("t");
        assert_eq!(g.frame_derivative(&t, FrameField::Gamma), Expr::one());
        assert_eq!(g.frame_derivative(&t, FrameField::V(0)), Expr::zero());
        assert_eq!(g.frame_derivative(&t, FrameField::H(2)), Expr::zero());
        assert_eq!(g.frame_derivative(&p("sqrt(t)"), FrameField::Gamma), p("1/(2*sqrt(t))"));
    }

    #[test]
    fn damped_oscillator() {
        let g = Geometry::new(sode(&["x"], &["u"], &["-x-u"], &[("t", 0.0, 1.0), ("x", 0.0, 1.0), ("u", 0.0, 1.0)]));
        assert_eq!(g.gamma[0][0], Expr::rational(1, 2));
        assert_eq!(g.frame_derivative(&g.gamma[0][0], FrameField::Gamma), Expr::zero());
        assert_eq!(g.phi[0][0], Expr::rational(3, 4));
    }

    #[test]
    fn example_three_jacobi_endomorphism() {
        let g = Geometry::new(sode(&["x", "y", "z"], &["u", "v", "w"], &["x*w", "x", "x"], &full_box(1.0, 2.0)));
        let expect = [["-w", "0", "u/2"], ["-1", "0", "0"], ["-1", "0", "0"]];
        for a in 0..3 {
            for b in 0..3 {
                assert_eq!(g.phi[a][b], p(expect[a][b]));
            }
        }
    }

    #[test]
    fn free_motion_is_flat() {
        let g = Geometry::new(sode(&["x", "y"], &["u", "v"], &["0", "0"], &full_box(0.0, 1.0)));
        assert!(g.phi.iter().flatten().all(Expr::is_zero_node));
        assert!((0..2).all(|d| g.curvature(d, 0, 1).is_zero_node()));
    }

    #[test]
    fn curvature_matches_horizontal_commutator() {
        let g = Geometry::new(sode(&["x", "y"], &["u", "v"], &["x*v", "0"], &full_box(0.5, 2.0)));
        assert_eq!(g.curvature(0, 0, 1), Expr::rational(1, 2));
        assert_eq!(g.curvature(0, 1, 0), Expr::rational(-1, 2));
        // Numeric oracle: [H_1, H_2] applied to the coordinate function u.
        let br = g.frame.coordinate_bracket(&g.frame.vectors[1], &g.frame.vectors[2]);
        let pt = g.zctx().points()[0].clone();
        let lhs = br[3].eval(&pt).unwrap();
        let rhs = g.curvature(0, 0, 1).eval(&pt).unwrap();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn commutator_table() {
        let g = Geometry::new(sode(&["x", "y"], &["u", "v"], &["x*v + u^2*t", "sin(y)*u"], &full_box(0.5, 2.0)));
        let n = 2;
        let z = g.zctx();
        for a in 0..n {
            // [Γ, V_a] = -H_a + Γ^b_a V_b
            for k in 0..g.dim() {
                let mut expect = Expr::zero();
                if k == g.h_index(a) {
                    expect = Expr::int(-1);
                }
                for b in 0..n {
                    if k == g.v_index(b) {
                        expect = g.gamma[b][a].clone();
                    }
                }
                let got = g.frame.structure(k, 0, g.v_index(a));
                assert_eq!(z.is_zero(&(got - expect)).verdict, ZeroVerdict::Zero);
            }
            // [Γ, H_a] = Γ^b_a H_b + Φ^b_a V_b
            for b in 0..n {
                let got_h = g.frame.structure(g.h_index(b), 0, g.h_index(a));
                let got_v = g.frame.structure(g.v_index(b), 0, g.h_index(a));
                assert_eq!(z.is_zero(&(got_h - &g.gamma[b][a])).verdict, ZeroVerdict::Zero);
                assert_eq!(z.is_zero(&(got_v - &g.phi[b][a])).verdict, ZeroVerdict::Zero);
            }
        }
        for d in 0..n {
            let got = g.frame.structure(g.v_index(d), g.h_index(0), g.h_index(1));
            assert_eq!(z.is_zero(&(got - g.curvature(d, 0, 1))).verdict, ZeroVerdict::Zero);
        }
    }

    #[test]
    fn d_theta_has_dt_psi_part() {
        let g = Geometry::new(sode(&["x", "y"], &["u", "v"], &["x*v", "u"], &full_box(0.5, 2.0)));
        for a in 0..2 {
            let theta = Form::basis(g.h_index(a), g.dim());
            let d = g.frame.d(&theta);
            assert_eq!(d.get(&[0, g.v_index(a)]), Expr::one());
            for b in 0..2 {
                assert_eq!(d.get(&[0, g.h_index(b)]), -g.gamma[a][b].clone());
            }
        }
        assert!(g.frame.d(&Form::basis(0, g.dim())).is_structurally_zero());
    }
}
