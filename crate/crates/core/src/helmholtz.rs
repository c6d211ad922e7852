//! Helmholtz conditions for multipliers, and closed Cartan 2-form candidates.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::classify::{form_census, Bnii1Data};
use crate::eigen::{Census, EigenData, NamedWitness, StructureFunctions};
use crate::expr::{Expr, ZeroContext, ZeroVerdict};
use crate::forms::{combinations, Form};
use crate::geometry::{FrameField, Geometry};
use crate::linalg;

#[derive(Debug, Error, PartialEq)]
pub enum HelmholtzError {
    #[error("multiplier is not symmetric: entries ({a},{b}) and ({b},{a}) differ")]
    NotSymmetric { a: usize, b: usize },
    #[error("expected a {expected}x{expected} matrix")]
    Shape { expected: usize },
}

/// Symmetric `g_{ab}`, stored as its upper triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct Multiplier {
    n: usize,
    upper: Vec<Expr>,
}

impl Multiplier {
    /// Accepts a full matrix whose transpose simplifies to the same entries.
    pub fn from_rows(rows: &[Vec<Expr>]) -> Result<Multiplier, HelmholtzError> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(HelmholtzError::Shape { expected: n });
        }
        let mut upper = Vec::with_capacity(n * (n + 1) / 2);
        for a in 0..n {
            for b in a..n {
                if !(&rows[a][b] - &rows[b][a]).simplify().is_zero_node() {
                    return Err(HelmholtzError::NotSymmetric { a: a + 1, b: b + 1 });
                }
                upper.push(rows[a][b].simplify());
            }
        }
        Ok(Multiplier { n, upper })
    }

    pub fn identity(n: usize) -> Multiplier {
        let rows: Vec<Vec<Expr>> = (0..n).map(|a| (0..n).map(|b| if a == b { Expr::one() } else { Expr::zero() }).collect()).collect();
        Multiplier::from_rows(&rows).expect("identity is symmetric")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, a: usize, b: usize) -> &Expr {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        &self.upper[a * self.n - a * (a + 1) / 2 + b]
    }

    pub fn rows(&self) -> Vec<Vec<Expr>> {
        (0..self.n).map(|a| (0..self.n).map(|b| self.get(a, b).clone()).collect()).collect()
    }

    pub fn scale(&self, k: &Expr) -> Multiplier {
        Multiplier { n: self.n, upper: self.upper.iter().map(|e| (e * k).simplify()).collect() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionResult {
    pub name: String,
    pub verdict: ZeroVerdict,
    /// Residuals that do not simplify to zero, keyed by index.
    pub residuals: BTreeMap<String, String>,
    pub witness: Option<NamedWitness>,
}

impl ConditionResult {
    fn from_items(z: &ZeroContext, name: &str, items: Vec<(String, Expr)>) -> ConditionResult {
        let items: Vec<(String, Expr)> = items.into_iter().map(|(k, e)| (k, e.simplify())).collect();
        let residuals = items.iter().filter(|(_, e)| !e.is_zero_node()).map(|(k, e)| (k.clone(), e.to_string())).collect();
        let census = Census::check(z, items);
        ConditionResult { name: name.into(), verdict: census.verdict, residuals, witness: census.witness }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Determinant {
    /// Symbolic determinant, attached for `n <= 3`.
    pub symbolic: Option<String>,
    /// Smallest `|det g|` over the sample points.
    pub min_abs: f64,
    pub verdict: ZeroVerdict,
}

#[derive(Debug, Clone, Serialize)]
pub struct HelmholtzCheck {
    pub conditions: Vec<ConditionResult>,
    pub det: Determinant,
    pub passed: bool,
    pub inconclusive: bool,
}

/// The four Helmholtz conditions and non-degeneracy of `g`.
pub fn check_helmholtz(g: &Multiplier, geo: &Geometry) -> HelmholtzCheck {
    let n = geo.n();
    let z = geo.zctx();
    let s = &geo.sode;
    let sym = ConditionResult { name: "symmetry".into(), verdict: ZeroVerdict::Zero, residuals: BTreeMap::new(), witness: None };

    let mut gamma_items = Vec::new();
    let mut phi_items = Vec::new();
    let mut vert_items = Vec::new();
    for a in 0..n {
        for b in a..n {
            let mut t = vec![geo.frame_derivative(g.get(a, b), FrameField::Gamma)];
            for c in 0..n {
                t.push(-(g.get(a, c) * &geo.gamma[c][b]));
                t.push(-(g.get(b, c) * &geo.gamma[c][a]));
            }
            gamma_items.push((format!("({},{})", a + 1, b + 1), Expr::add(t)));
            if a < b {
                let t: Vec<Expr> =
                    (0..n).flat_map(|c| [g.get(a, c) * &geo.phi[c][b], -(g.get(b, c) * &geo.phi[c][a])]).collect();
                phi_items.push((format!("({},{})", a + 1, b + 1), Expr::add(t)));
            }
        }
        for b in 0..n {
            for c in b + 1..n {
                let e = g.get(a, b).diff(&s.vels[c]) - g.get(a, c).diff(&s.vels[b]);
                vert_items.push((format!("({};{},{})", a + 1, b + 1, c + 1), e));
            }
        }
    }
    let conditions = vec![
        sym,
        ConditionResult::from_items(z, "gamma", gamma_items),
        ConditionResult::from_items(z, "phi", phi_items),
        ConditionResult::from_items(z, "vertical", vert_items),
    ];
    let det = determinant(g, z);
    let inconclusive = det.verdict == ZeroVerdict::Inconclusive || conditions.iter().any(|c| c.verdict == ZeroVerdict::Inconclusive);
    let passed = conditions.iter().all(|c| c.verdict == ZeroVerdict::Zero) && det.verdict == ZeroVerdict::NonZero;
    HelmholtzCheck { conditions, det, passed, inconclusive }
}

fn determinant(g: &Multiplier, z: &ZeroContext) -> Determinant {
    let rows = g.rows();
    let symbolic = (g.n() <= 3).then(|| linalg::det(&rows));
    let mut min_abs = f64::INFINITY;
    let mut valid = 0;
    for p in z.points() {
        let num: Result<Vec<Vec<f64>>, _> = rows.iter().map(|r| r.iter().map(|e| e.eval(p)).collect()).collect();
        if let Ok(m) = num {
            valid += 1;
            min_abs = min_abs.min(linalg::det_f64(m).abs());
        }
    }
    let verdict = match &symbolic {
        Some(d) => z.is_zero(d).verdict,
        None if valid == 0 => ZeroVerdict::Inconclusive,
        None if min_abs > 1e-9 => ZeroVerdict::NonZero,
        None => ZeroVerdict::Inconclusive,
    };
    // A symbolically nonzero determinant may still vanish somewhere on the box.
    let verdict = if verdict == ZeroVerdict::NonZero && valid > 0 && min_abs <= 1e-12 { ZeroVerdict::Inconclusive } else { verdict };
    Determinant { symbolic: symbolic.map(|d| d.to_string()), min_abs: if valid == 0 { 0.0 } else { min_abs }, verdict }
}

/// `g_{cd} = r_{ab} φ^a_c φ^b_d`.
pub fn r_to_g(r: &[Vec<Expr>], eig: &EigenData) -> Multiplier {
    let n = eig.n();
    let rows: Vec<Vec<Expr>> = (0..n)
        .map(|c| {
            (0..n)
                .map(|d| {
                    let mut terms = Vec::new();
                    for a in 0..n {
                        for b in 0..n {
                            if !r[a][b].is_zero_node() {
                                terms.push(&r[a][b] * &eig.phi[a][c] * &eig.phi[b][d]);
                            }
                        }
                    }
                    Expr::add(terms).simplify()
                })
                .collect()
        })
        .collect();
    // Upper triangle only; `r` is assumed symmetric.
    let sym: Vec<Vec<Expr>> =
        (0..n).map(|c| (0..n).map(|d| if c <= d { rows[c][d].clone() } else { rows[d][c].clone() }).collect()).collect();
    Multiplier::from_rows(&sym).expect("symmetrized")
}

/// Diagonal `r_a` as a full matrix.
pub fn diagonal(r: &[Expr]) -> Vec<Vec<Expr>> {
    let n = r.len();
    (0..n).map(|a| (0..n).map(|b| if a == b { r[a].clone() } else { Expr::zero() }).collect()).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct GroupResult {
    /// Slot types of the 3-vectors in the group, such as `Gamma,H,V`.
    pub group: String,
    pub verdict: ZeroVerdict,
    pub witness: Option<NamedWitness>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClosedFormCheck {
    pub groups: Vec<GroupResult>,
    pub closed: ZeroVerdict,
    pub maximal_rank: bool,
    /// When the four displayed groups vanish, whether `(H,H,V)` and `(H,H,H)` vanish too.
    pub derivability: Option<bool>,
    pub passed: bool,
}

const DISPLAYED: [&str; 4] = ["Gamma,V,V", "Gamma,H,V", "Gamma,H,H", "H,V,V"];
const DERIVED: [&str; 2] = ["H,H,V", "H,H,H"];

/// `Ω = g_{cd} ψ^c ∧ θ^d` in the standard coframe.
pub fn cartan_form(g: &Multiplier, geo: &Geometry) -> Form {
    let n = geo.n();
    let mut f = Form::zero(2, geo.dim());
    for c in 0..n {
        for d in 0..n {
            f.set(&[geo.v_index(c), geo.h_index(d)], g.get(c, d).clone());
        }
    }
    f
}

/// `dΩ = 0` group by group, and maximal rank of `Ω`.
pub fn check_closed_form(r: &[Vec<Expr>], geo: &Geometry, eig: &EigenData) -> ClosedFormCheck {
    let g = r_to_g(r, eig);
    let omega = cartan_form(&g, geo);
    let d_omega = geo.frame.d(&omega);
    let z = geo.zctx();
    let n = geo.n();
    let kind = |i: usize| -> &'static str {
        if i == 0 {
            "Gamma"
        } else if i <= n {
            "H"
        } else {
            "V"
        }
    };
    let group_name = |idx: &[usize]| -> String {
        let mut kinds: Vec<&str> = idx.iter().map(|&i| kind(i)).collect();
        kinds.sort_by_key(|k| match *k {
            "Gamma" => 0,
            "H" => 1,
            _ => 2,
        });
        kinds.join(",")
    };
    let mut grouped: BTreeMap<String, Vec<(String, Expr)>> = BTreeMap::new();
    for idx in combinations(geo.dim(), 3) {
        let e = d_omega.get(&idx);
        let label = idx.iter().map(|&i| geo.frame.names[i].clone()).collect::<Vec<_>>().join(",");
        grouped.entry(group_name(&idx)).or_default().push((format!("dOmega({label})"), e));
    }
    let groups: Vec<GroupResult> = grouped
        .into_iter()
        .map(|(group, items)| {
            let census = Census::check(z, items);
            GroupResult { group, verdict: census.verdict, witness: census.witness }
        })
        .collect();
    let verdict_of = |name: &str| groups.iter().find(|g| g.group == name).map(|g| g.verdict).unwrap_or(ZeroVerdict::Zero);
    let closed = if groups.iter().any(|g| g.verdict == ZeroVerdict::NonZero) {
        ZeroVerdict::NonZero
    } else if groups.iter().any(|g| g.verdict == ZeroVerdict::Inconclusive) {
        ZeroVerdict::Inconclusive
    } else {
        ZeroVerdict::Zero
    };
    let derivability = DISPLAYED
        .iter()
        .all(|g| verdict_of(g) == ZeroVerdict::Zero)
        .then(|| DERIVED.iter().all(|g| verdict_of(g) == ZeroVerdict::Zero));
    let maximal_rank = omega_has_maximal_rank(&omega, geo);
    ClosedFormCheck { groups, closed, maximal_rank, derivability, passed: closed == ZeroVerdict::Zero && maximal_rank }
}

/// `∧ⁿΩ ∧ dt ≠ 0` somewhere, via the determinant of `Ω` restricted to the horizontal and vertical slots.
fn omega_has_maximal_rank(omega: &Form, geo: &Geometry) -> bool {
    let slots: Vec<usize> = (1..geo.dim()).collect();
    geo.zctx().points().iter().any(|p| {
        let m: Result<Vec<Vec<f64>>, _> =
            slots.iter().map(|&i| slots.iter().map(|&j| if i == j { Ok(0.0) } else { omega.get(&[i, j]).eval(p) }).collect()).collect();
        m.map(|m| linalg::det_f64(m).abs() > 1e-9).unwrap_or(false)
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SigmaAlpha {
    pub label: usize,
    pub verdict: ZeroVerdict,
    pub witness: Option<NamedWitness>,
    /// `P_α = -σ_α(X_α^V)` and `Q_α = -σ_α(X_α^H)`.
    pub p: String,
    pub q: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct PfaffianCheck {
    pub sigma1: ZeroVerdict,
    pub sigma1_witness: Option<NamedWitness>,
    pub sigma_alpha: Vec<SigmaAlpha>,
    pub passed: bool,
}

/// Substitutes a candidate `r̃₁` and `r_α` into the Pfaffian system of the rank-one branch.
pub fn verify_pfaffian_solution(
    r1: &Expr,
    r_alpha: &BTreeMap<usize, Expr>,
    sf: &StructureFunctions,
    data: &Bnii1Data,
    z: &ZeroContext,
) -> PfaffianCheck {
    let (i, _) = data.pair;
    let frame = &sf.frame;
    let sigma1 = frame.d_function(r1).add(&data.xi_tilde[i].scale(r1)).simplified();
    let c1 = form_census(z, sf, "sigma1", &sigma1);
    let mut sigma_alpha = Vec::new();
    for &a in &data.alphas {
        let ra = r_alpha.get(&a).cloned().unwrap_or_else(Expr::zero);
        let s = frame.d_function(&ra).add(&data.xi_tilde[a].scale(r1)).add(&sf.xi(a, a).scale(&ra)).simplified();
        let census = form_census(z, sf, &format!("sigma{}", a + 1), &s.modulo(&[sf.v(a), sf.h(a)]));
        sigma_alpha.push(SigmaAlpha {
            label: a + 1,
            verdict: census.verdict,
            witness: census.witness,
            p: (-s.get(&[sf.v(a)])).simplify().to_string(),
            q: (-s.get(&[sf.h(a)])).simplify().to_string(),
        });
    }
    let passed = c1.verdict == ZeroVerdict::Zero && sigma_alpha.iter().all(|s| s.verdict == ZeroVerdict::Zero);
    PfaffianCheck { sigma1: c1.verdict, sigma1_witness: c1.witness, sigma_alpha, passed }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::classify_case_b;
    use crate::eigen::tests::{ex1, ex2, ex2_sf};
    use crate::expr::{parse, Point};
    use crate::geometry::tests::sode;

    fn p(geo: &Geometry, s: &str) -> Expr {
        parse(s, &geo.sode.symbols()).unwrap()
    }

    fn mat(geo: &Geometry, rows: &[&[&str]]) -> Vec<Vec<Expr>> {
        rows.iter().map(|r| r.iter().map(|s| p(geo, s)).collect()).collect()
    }

    fn ex2_g(geo: &Geometry) -> Multiplier {
        Multiplier::from_rows(&mat(geo, &[&["0", "0", "-1/2"], &["0", "1", "0"], &["-1/2", "0", "0"]])).unwrap()
    }

    #[test]
    fn free_motion_identity_passes() {
        let g = Geometry::new(sode(&["x", "y"], &["u", "v"], &["0", "0"], &[]));
        let h = check_helmholtz(&Multiplier::identity(2), &g);
        assert!(h.passed);
        assert_eq!(h.det.symbolic.as_deref(), Some("1"));
    }

    #[test]
    fn example2_multiplier_passes() {
        let g = ex2();
        let h = check_helmholtz(&ex2_g(&g), &g);
        assert!(h.passed, "{h:?}");
        assert_eq!(h.det.symbolic.as_deref(), Some("-1/4"));
    }

    #[test]
    fn example1_identity_fails_phi_symmetry() {
        let g = ex1();
        let h = check_helmholtz(&Multiplier::identity(3), &g);
        assert!(!h.passed);
        let phi = h.conditions.iter().find(|c| c.name == "phi").unwrap();
        assert_eq!(phi.verdict, ZeroVerdict::NonZero);
        let w = phi.witness.as_ref().unwrap();
        assert!(w.value.abs() > 1e-6);
    }

    #[test]
    fn asymmetric_multiplier_is_unrepresentable() {
        let g = ex2();
        let err = Multiplier::from_rows(&mat(&g, &[&["1", "t"], &["0", "1"]])).unwrap_err();
        assert_eq!(err, HelmholtzError::NotSymmetric { a: 1, b: 2 });
    }

    #[test]
    fn r_to_g_example2_matches_numeric_contraction() {
        let g = ex2();
        let sf = ex2_sf();
        let r = diagonal(&[p(&g, "sqrt(t)"), p(&g, "-sqrt(t)"), p(&g, "1")]);
        let m = r_to_g(&r, &sf.eig);
        assert_eq!(m, ex2_g(&g));
        // Oracle: contract numerically at t = 4 with hand-written φ rows.
        let phi = [[-0.25, 0.0, 0.5], [0.25, 0.0, 0.5], [0.0, 1.0, 0.0]];
        let rr = [2.0, -2.0, 1.0];
        let pt: Point = [("t".to_string(), 4.0)].into();
        for c in 0..3 {
            for d in 0..3 {
                let want: f64 = (0..3).map(|a| rr[a] * phi[a][c] * phi[a][d]).sum();
                assert!((m.get(c, d).eval(&pt).unwrap() - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_weight_is_degenerate() {
        let g = ex2();
        let sf = ex2_sf();
        let m = r_to_g(&diagonal(&[p(&g, "sqrt(t)"), p(&g, "-sqrt(t)"), Expr::zero()]), &sf.eig);
        let h = check_helmholtz(&m, &g);
        assert_eq!(h.det.verdict, ZeroVerdict::Zero);
        assert!(!h.passed);
    }

    #[test]
    fn example2_cartan_forms_are_closed() {
        let g = ex2();
        let sf = ex2_sf();
        for r3 in ["1", "y - v*t"] {
            let r = diagonal(&[p(&g, "sqrt(t)"), p(&g, "-sqrt(t)"), p(&g, r3)]);
            let c = check_closed_form(&r, &g, &sf.eig);
            assert!(c.passed, "r3 = {r3}: {c:?}");
            assert_eq!(c.derivability, Some(true));
            assert!(check_helmholtz(&r_to_g(&r, &sf.eig), &g).passed);
        }
    }

    #[test]
    fn routes_agree_on_failures() {
        let g = ex2();
        let sf = ex2_sf();
        let r = diagonal(&[p(&g, "t"), p(&g, "-sqrt(t)"), p(&g, "1")]);
        let closed = check_closed_form(&r, &g, &sf.eig);
        let sarlet = check_helmholtz(&r_to_g(&r, &sf.eig), &g);
        assert!(!closed.passed);
        assert!(!sarlet.passed);
    }

    #[test]
    fn scaling_covariance() {
        let g = ex2();
        let base = ex2_g(&g);
        let k = Expr::int(3);
        let scaled = base.scale(&k);
        assert_eq!(check_helmholtz(&scaled, &g).passed, check_helmholtz(&base, &g).passed);
        assert_eq!(linalg::det(&scaled.rows()), (Expr::int(27) * linalg::det(&base.rows())).simplify());
    }

    #[test]
    fn pfaffian_candidates() {
        let g = ex2();
        let sf = ex2_sf();
        let c = classify_case_b(&g, &sf);
        let data = c.bnii1.unwrap();
        let z = g.zctx();
        let ok = verify_pfaffian_solution(&p(&g, "sqrt(t)"), &BTreeMap::from([(2, p(&g, "v"))]), &sf, &data, z);
        assert!(ok.passed, "{ok:?}");
        assert_eq!((ok.sigma_alpha[0].p.as_str(), ok.sigma_alpha[0].q.as_str()), ("-1", "0"));
        let ok = verify_pfaffian_solution(&p(&g, "sqrt(t)"), &BTreeMap::from([(2, p(&g, "y - v*t"))]), &sf, &data, z);
        assert!(ok.passed, "{ok:?}");
        let bad = verify_pfaffian_solution(&p(&g, "t"), &BTreeMap::new(), &sf, &data, z);
        assert_eq!(bad.sigma1, ZeroVerdict::NonZero);
        assert!(!bad.passed);
    }
}
