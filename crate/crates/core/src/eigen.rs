//! Eigen-structure of the Jacobi endomorphism and structure functions of the eigen-frame.

use serde::Serialize;
use thiserror::Error;

use crate::expr::{Expr, Node, Point, ZeroContext, ZeroTest, ZeroVerdict};
use crate::forms::{Form, Frame};
use crate::geometry::Geometry;
use crate::linalg;

#[derive(Debug, Error, PartialEq)]
pub enum EigenError {
    #[error("eigenvector {vector} fails Phi X = lambda X in component {component}: residual {residual} = {value:e} at {point:?}")]
    EigenVerificationFailed { vector: usize, component: usize, residual: String, value: f64, point: Point },
    #[error("eigendata has wrong shape: expected {expected} {what}, found {found}")]
    Shape { what: &'static str, expected: usize, found: usize },
    #[error("automatic eigen-solve unavailable ({0}); supply eigendata in the problem file")]
    AutoSolveUnavailable(String),
    #[error("eigenvector matrix is not invertible on the domain")]
    SingularEigenvectorMatrix,
}

#[derive(Debug, Error, PartialEq)]
pub enum StructureError {
    #[error("expansion mismatch in {form} on ({slots}): residual {residual}")]
    ExpansionMismatch { form: String, slots: String, residual: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Normalize {
    #[default]
    None,
    UnitFirstComponent,
}

/// How eigen-data enters the pipeline.
#[derive(Debug, Clone)]
pub enum EigenInput {
    Auto,
    /// `vectors[a]` holds the components `X_a^c`.
    Supplied { lambda: Vec<Expr>, vectors: Vec<Vec<Expr>> },
    /// The user asserts that Φ is not diagonalizable.
    NonDiagonalizable { lambda: Vec<Expr> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EigenSource {
    Supplied,
    Automatic,
}

#[derive(Debug, Clone)]
pub struct EigenData {
    pub lambda: Vec<Expr>,
    /// `x[a][c] = X_a^c`.
    pub x: Vec<Vec<Expr>>,
    /// `phi[a][c] = φ^a_c`.
    pub phi: Vec<Vec<Expr>>,
    /// Zero test of `λ_a - λ_b`.
    pub equal: Vec<Vec<ZeroVerdict>>,
    pub source: EigenSource,
    pub caveats: Vec<String>,
}

impl EigenData {
    pub fn n(&self) -> usize {
        self.lambda.len()
    }

    pub fn all_distinct(&self) -> bool {
        let n = self.n();
        (0..n).all(|a| (0..n).all(|b| a == b || self.equal[a][b] == ZeroVerdict::NonZero))
    }

    pub fn has_repeated(&self) -> bool {
        let n = self.n();
        (0..n).any(|a| (0..n).any(|b| a != b && self.equal[a][b] == ZeroVerdict::Zero))
    }
}

#[derive(Debug, Clone)]
pub enum Resolution {
    Diagonalizable(EigenData),
    NonDiagonalizable { lambda: Vec<Expr>, note: String },
}

/// Verifies supplied eigen-data or solves for it, then inverts the eigenvector matrix.
pub fn resolve_eigendata(geo: &Geometry, input: &EigenInput, normalize: Normalize) -> Result<Resolution, EigenError> {
    let n = geo.n();
    let z = geo.zctx();
    let (lambda, vectors, source) = match input {
        EigenInput::NonDiagonalizable { lambda } => {
            return Ok(Resolution::NonDiagonalizable {
                lambda: lambda.clone(),
                note: "non-diagonalizable Jacobi endomorphism declared in the problem file".into(),
            })
        }
        EigenInput::Supplied { lambda, vectors } => {
            check_len("eigenvalues", n, lambda.len())?;
            check_len("eigenvectors", n, vectors.len())?;
            for v in vectors {
                check_len("eigenvector components", n, v.len())?;
            }
            (lambda.clone(), vectors.clone(), EigenSource::Supplied)
        }
        EigenInput::Auto => match auto_solve(&geo.phi, z)? {
            AutoOutcome::Solved(l, v) => (l, v, EigenSource::Automatic),
            AutoOutcome::Defective { lambda, eigenvalue } => {
                return Ok(Resolution::NonDiagonalizable {
                    lambda,
                    note: format!("eigenvalue {eigenvalue} has fewer independent eigenvectors than its multiplicity"),
                })
            }
        },
    };
    let lambda: Vec<Expr> = lambda.iter().map(Expr::simplify).collect();
    let vectors: Vec<Vec<Expr>> = match normalize {
        Normalize::None => vectors,
        Normalize::UnitFirstComponent => vectors.iter().map(|v| unit_first(v, z)).collect(),
    };

    let mut caveats = Vec::new();
    for (a, v) in vectors.iter().enumerate() {
        let image = linalg::mat_vec(&geo.phi, v);
        for c in 0..n {
            let residual = (&image[c] - &lambda[a] * &v[c]).simplify();
            let test = z.is_zero(&residual);
            match test.verdict {
                ZeroVerdict::Zero => {}
                ZeroVerdict::NonZero => {
                    let w = test.witness.expect("nonzero verdict carries a witness");
                    return Err(EigenError::EigenVerificationFailed {
                        vector: a + 1,
                        component: c + 1,
                        residual: residual.to_string(),
                        value: w.value,
                        point: w.point,
                    });
                }
                ZeroVerdict::Inconclusive => {
                    caveats.push(format!("eigen equation for vector {} component {} is inconclusive", a + 1, c + 1))
                }
            }
        }
    }

    let m = linalg::transpose(&vectors);
    let phi = linalg::inverse(&m, z).ok_or(EigenError::SingularEigenvectorMatrix)?;
    let phi: Vec<Vec<Expr>> = phi.iter().map(|r| r.iter().map(Expr::simplify).collect()).collect();
    let equal = (0..n)
        .map(|a| {
            (0..n)
                .map(|b| if a == b { ZeroVerdict::Zero } else { z.is_zero(&(&lambda[a] - &lambda[b]).simplify()).verdict })
                .collect()
        })
        .collect();
    Ok(Resolution::Diagonalizable(EigenData { lambda, x: vectors, phi, equal, source, caveats }))
}

fn check_len(what: &'static str, expected: usize, found: usize) -> Result<(), EigenError> {
    if expected == found {
        Ok(())
    } else {
        Err(EigenError::Shape { what, expected, found })
    }
}

fn unit_first(v: &[Expr], z: &ZeroContext) -> Vec<Expr> {
    match v.iter().find(|c| z.is_zero(c).is_nonzero()) {
        Some(pivot) => {
            let inv = pivot.recip();
            v.iter().map(|c| (c * &inv).simplify()).collect()
        }
        None => v.to_vec(),
    }
}

enum AutoOutcome {
    Solved(Vec<Expr>, Vec<Vec<Expr>>),
    Defective { lambda: Vec<Expr>, eigenvalue: Expr },
}

/// Characteristic-polynomial roots and null spaces for `n <= 3`.
fn auto_solve(phi: &[Vec<Expr>], z: &ZeroContext) -> Result<AutoOutcome, EigenError> {
    let n = phi.len();
    if n > 3 {
        return Err(EigenError::AutoSolveUnavailable(format!("n = {n} exceeds 3")));
    }
    let roots = eigenvalues(phi, z)?;
    let mut groups: Vec<(Expr, usize)> = Vec::new();
    for r in &roots {
        match groups.iter_mut().find(|(g, _)| z.is_zero(&(g - r).simplify()).is_zero()) {
            Some(g) => g.1 += 1,
            None => groups.push((r.clone(), 1)),
        }
    }
    let mut lambda = Vec::new();
    let mut vectors = Vec::new();
    for (l, mult) in groups {
        let shifted: Vec<Vec<Expr>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { (&phi[i][j] - &l).simplify() } else { phi[i][j].clone() }).collect())
            .collect();
        let ns = linalg::nullspace(&shifted, z);
        if ns.len() < mult {
            if ns.is_empty() {
                return Err(EigenError::AutoSolveUnavailable(format!("no eigenvector found for eigenvalue {l}")));
            }
            return Ok(AutoOutcome::Defective { lambda: roots, eigenvalue: l });
        }
        if ns.len() > mult {
            return Err(EigenError::AutoSolveUnavailable(format!("eigenspace of {l} larger than its multiplicity")));
        }
        for v in ns {
            lambda.push(l.clone());
            vectors.push(v);
        }
    }
    Ok(AutoOutcome::Solved(lambda, vectors))
}

/// Roots of the characteristic polynomial, each simplified.
fn eigenvalues(phi: &[Vec<Expr>], z: &ZeroContext) -> Result<Vec<Expr>, EigenError> {
    let n = phi.len();
    let tr = Expr::add((0..n).map(|i| phi[i][i].clone()).collect()).simplify();
    match n {
        1 => Ok(vec![phi[0][0].simplify()]),
        2 => quadratic(&-tr, &linalg::det(phi), z),
        _ => {
            let minor = |i: usize, j: usize| &phi[i][i] * &phi[j][j] - &phi[i][j] * &phi[j][i];
            let e2 = (minor(0, 1) + minor(0, 2) + minor(1, 2)).simplify();
            let e3 = linalg::det(phi);
            // λ³ - e1 λ² + e2 λ - e3
            let charpoly = |x: &Expr| -> Expr {
                (Expr::powi(x.clone(), 3) - &tr * Expr::powi(x.clone(), 2) + &e2 * x - &e3).simplify()
            };
            let mut candidates = vec![Expr::zero()];
            candidates.extend((0..n).map(|i| phi[i][i].simplify()));
            for c in candidates {
                if !z.is_zero(&charpoly(&c)).is_zero() {
                    continue;
                }
                // Deflate: λ³ - e1 λ² + e2 λ - e3 = (λ - c)(λ² + b λ + k).
                let b = (&c - &tr).simplify();
                let k = (&e2 + &c * &b).simplify();
                let mut roots = quadratic(&b, &k, z)?;
                roots.push(c);
                return Ok(roots);
            }
            Err(EigenError::AutoSolveUnavailable("characteristic polynomial has no recognizable root".into()))
        }
    }
}

/// Roots of `λ² + b λ + k`, larger root first when the discriminant is positive.
fn quadratic(b: &Expr, k: &Expr, z: &ZeroContext) -> Result<Vec<Expr>, EigenError> {
    let disc = (b * b - Expr::int(4) * k).simplify();
    let half = Expr::rational(1, 2);
    if z.is_zero(&disc).is_zero() {
        let r = (-(&half * b)).simplify();
        return Ok(vec![r.clone(), r]);
    }
    for p in z.points() {
        if let Ok(v) = disc.eval(p) {
            if v < 0.0 {
                return Err(EigenError::AutoSolveUnavailable("complex eigenvalues".into()));
            }
        }
    }
    let s = exact_sqrt(&disc).unwrap_or_else(|| Expr::sqrt(disc.clone()));
    Ok(vec![(&half * (-b + &s)).simplify(), (&half * (-b - &s)).simplify()])
}

/// Square root of a positive monomial with its exponents halved; sign ambiguities are irrelevant
/// because both roots are taken.
fn exact_sqrt(e: &Expr) -> Option<Expr> {
    let (c, rest) = e.split_coef();
    if c <= crate::expr::qi(0) {
        return None;
    }
    let factors = match rest.node() {
        Node::Mul(fs) => fs.clone(),
        Node::Num(_) => vec![],
        Node::Sym(_) | Node::Pow(..) | Node::Fn(..) => vec![rest.clone()],
        Node::Add(_) => return None,
    };
    let mut out = vec![Expr::pow(Expr::num(c), crate::expr::q(1, 2))];
    for f in factors {
        match f.node() {
            Node::Pow(b, p) => out.push(Expr::pow(b.clone(), p / crate::expr::qi(2))),
            Node::Sym(_) | Node::Fn(..) => out.push(Expr::pow(f.clone(), crate::expr::q(1, 2))),
            _ => return None,
        }
    }
    Some(Expr::mul(out))
}

/// A structure function together with its zero test.
#[derive(Debug, Clone)]
pub struct Entry {
    pub value: Expr,
    pub test: ZeroTest,
}

impl Entry {
    fn new(value: Expr, z: &ZeroContext) -> Entry {
        let test = z.is_zero(&value);
        Entry { value, test }
    }

    pub fn verdict(&self) -> ZeroVerdict {
        self.test.verdict
    }
}

/// A named expression that tested nonzero, with the sample point that shows it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedWitness {
    pub name: String,
    pub expr: String,
    pub value: f64,
    pub point: Point,
}

impl NamedWitness {
    pub fn from_test(name: String, expr: &Expr, test: &ZeroTest) -> Option<NamedWitness> {
        test.witness
            .as_ref()
            .map(|w| NamedWitness { name, expr: expr.to_string(), value: w.value, point: w.point.clone() })
    }
}

/// Outcome of a conjunction of zero tests.
#[derive(Debug, Clone, Serialize)]
pub struct Census {
    pub verdict: ZeroVerdict,
    /// First entry that tested nonzero.
    pub witness: Option<NamedWitness>,
    pub inconclusive: Vec<String>,
}

impl Census {
    pub fn zero() -> Census {
        Census { verdict: ZeroVerdict::Zero, witness: None, inconclusive: Vec::new() }
    }

    /// Conjunction over precomputed entries.
    pub fn of<'a>(entries: impl IntoIterator<Item = (String, &'a Entry)>) -> Census {
        let mut out = Census::zero();
        for (name, e) in entries {
            if out.absorb(name, &e.value, &e.test) {
                break;
            }
        }
        out
    }

    /// Conjunction over expressions tested on demand; stops at the first nonzero one.
    pub fn check(z: &ZeroContext, items: impl IntoIterator<Item = (String, Expr)>) -> Census {
        let mut out = Census::zero();
        for (name, e) in items {
            let e = e.simplify();
            let test = z.is_zero(&e);
            if out.absorb(name, &e, &test) {
                break;
            }
        }
        out
    }

    /// Folds in one test; returns true once the conjunction is known to fail.
    fn absorb(&mut self, name: String, e: &Expr, test: &ZeroTest) -> bool {
        match test.verdict {
            ZeroVerdict::Zero => false,
            ZeroVerdict::NonZero => {
                self.verdict = ZeroVerdict::NonZero;
                self.witness = NamedWitness::from_test(name, e, test);
                true
            }
            ZeroVerdict::Inconclusive => {
                self.inconclusive.push(name);
                self.verdict = ZeroVerdict::Inconclusive;
                false
            }
        }
    }
}

/// Eigen-frame `{Γ, X_b^H, X_b^V}` with coframe `{dt, φ^{bH}, φ^{bV}}` and the extracted structure functions.
///
/// Frame index 0 is `Γ`, `1 + b` is `X_b^H`, `1 + n + b` is `X_b^V`.
#[derive(Debug, Clone)]
pub struct StructureFunctions {
    pub n: usize,
    pub eig: EigenData,
    pub frame: Frame,
    /// `dφ^{aV}` and `dφ^{aH}` in the eigen-coframe.
    pub dphi_v: Vec<Form>,
    pub dphi_h: Vec<Form>,
    /// `tau_gamma[a][b] = τ^{aΓ}_b`.
    pub tau_gamma: Vec<Vec<Entry>>,
    /// `tau_v[a][b][c] = τ^{aV}_{bc}`.
    pub tau_v: Vec<Vec<Vec<Entry>>>,
    /// `tau_h[a][b][c] = τ^{aH}_{bc}`.
    pub tau_h: Vec<Vec<Vec<Entry>>>,
    /// `curv[a][b][c] = C^a_{bc} = φ^{aV}(R(X_b^H, X_c^H))`.
    pub curv: Vec<Vec<Vec<Entry>>>,
    pub caveats: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Integrability {
    Integrable,
    NonIntegrable,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct IntegrabilityResult {
    pub label: usize,
    pub verdict: Integrability,
    pub witness: Option<NamedWitness>,
}

pub fn tau_gamma_name(a: usize, b: usize) -> String {
    format!("tau^{}G_{}", a + 1, b + 1)
}

pub fn tau_v_name(a: usize, b: usize, c: usize) -> String {
    format!("tau^{}V_{}{}", a + 1, b + 1, c + 1)
}

pub fn tau_h_name(a: usize, b: usize, c: usize) -> String {
    format!("tau^{}H_{}{}", a + 1, b + 1, c + 1)
}

pub fn curv_name(a: usize, b: usize, c: usize) -> String {
    format!("C^{}_{}{}", a + 1, b + 1, c + 1)
}

impl StructureFunctions {
    pub fn new(geo: &Geometry, eig: EigenData) -> Result<StructureFunctions, StructureError> {
        let n = geo.n();
        let dim = geo.dim();
        let z = geo.zctx();
        let h = |b: usize| 1 + b;
        let v = |b: usize| 1 + n + b;

        // t[i][j] = standard covector j on eigen vector i.
        let mut t = vec![vec![Expr::zero(); dim]; dim];
        t[0][0] = Expr::one();
        for b in 0..n {
            for c in 0..n {
                t[h(b)][geo.h_index(c)] = eig.x[b][c].clone();
                t[v(b)][geo.v_index(c)] = eig.x[b][c].clone();
            }
        }
        let copy = |a: usize, idx: &dyn Fn(usize) -> usize| {
            let mut comps = vec![Expr::zero(); dim];
            for c in 0..n {
                comps[idx(c)] = eig.phi[a][c].clone();
            }
            Form::from_components(comps)
        };
        let mut dphi_v = Vec::with_capacity(n);
        let mut dphi_h = Vec::with_capacity(n);
        for a in 0..n {
            let pv = copy(a, &|c| geo.v_index(c));
            let ph = copy(a, &|c| geo.h_index(c));
            dphi_v.push(geo.frame.d(&pv).transform(&t).simplified());
            dphi_h.push(geo.frame.d(&ph).transform(&t).simplified());
        }

        let tau_gamma = (0..n)
            .map(|a| (0..n).map(|b| Entry::new(-dphi_v[a].get(&[0, v(b)]), z)).collect())
            .collect();
        let table = |f: &dyn Fn(usize, usize, usize) -> Expr| -> Vec<Vec<Vec<Entry>>> {
            (0..n).map(|a| (0..n).map(|b| (0..n).map(|c| Entry::new(f(a, b, c).simplify(), z)).collect()).collect()).collect()
        };
        let tau_v = table(&|a, b, c| -dphi_h[a].get(&[v(b), h(c)]));
        let tau_h = table(&|a, b, c| dphi_v[a].get(&[v(c), h(b)]));
        let curv = table(&|a, b, c| -dphi_v[a].get(&[h(b), h(c)]));

        let frame = eigen_frame(geo, &eig, &dphi_v, &dphi_h);
        let mut sf = StructureFunctions {
            n,
            eig,
            frame,
            dphi_v,
            dphi_h,
            tau_gamma,
            tau_v,
            tau_h,
            curv,
            caveats: Vec::new(),
        };
        sf.cross_check(geo)?;
        Ok(sf)
    }

    pub fn h(&self, b: usize) -> usize {
        1 + b
    }

    pub fn v(&self, b: usize) -> usize {
        1 + self.n + b
    }

    pub fn dim(&self) -> usize {
        2 * self.n + 1
    }

    pub fn tg(&self, a: usize, b: usize) -> &Expr {
        &self.tau_gamma[a][b].value
    }

    pub fn tv(&self, a: usize, b: usize, c: usize) -> &Expr {
        &self.tau_v[a][b][c].value
    }

    pub fn th(&self, a: usize, b: usize, c: usize) -> &Expr {
        &self.tau_h[a][b][c].value
    }

    pub fn c(&self, a: usize, b: usize, c: usize) -> &Expr {
        &self.curv[a][b][c].value
    }

    /// `dφ^{aV}` rebuilt from the structure functions.
    pub fn expected_dphi_v(&self, a: usize) -> Form {
        let n = self.n;
        let mut f = Form::zero(2, self.dim());
        for b in 0..n {
            f.set(&[0, self.v(b)], -self.tg(a, b));
            for c in 0..n {
                f.set(&[self.v(b), self.h(c)], self.th(a, c, b).clone());
                if b < c {
                    f.set(&[self.v(b), self.v(c)], self.tv(a, c, b) - self.tv(a, b, c));
                    f.set(&[self.h(b), self.h(c)], -self.c(a, b, c));
                }
            }
        }
        f.set(&[0, self.h(a)], -&self.eig.lambda[a]);
        f
    }

    /// `dφ^{aH}` rebuilt from the structure functions.
    pub fn expected_dphi_h(&self, a: usize) -> Form {
        let n = self.n;
        let mut f = Form::zero(2, self.dim());
        for b in 0..n {
            f.set(&[0, self.h(b)], -self.tg(a, b));
            for c in 0..n {
                f.set(&[self.v(b), self.h(c)], -self.tv(a, b, c));
                if b < c {
                    f.set(&[self.h(b), self.h(c)], self.th(a, c, b) - self.th(a, b, c));
                }
            }
        }
        f.set(&[0, self.v(a)], Expr::one());
        f
    }

    fn cross_check(&mut self, geo: &Geometry) -> Result<(), StructureError> {
        let n = self.n;
        let z = geo.zctx().clone();
        for a in 0..n {
            for (name, direct, rebuilt) in [
                (format!("dphi^{}V", a + 1), &self.dphi_v[a], self.expected_dphi_v(a)),
                (format!("dphi^{}H", a + 1), &self.dphi_h[a], self.expected_dphi_h(a)),
            ] {
                let diff = direct.sub(&rebuilt);
                for (idx, e) in diff.components() {
                    let residual = e.simplify();
                    match z.is_zero(&residual).verdict {
                        ZeroVerdict::Zero => {}
                        ZeroVerdict::NonZero => {
                            return Err(StructureError::ExpansionMismatch {
                                form: name,
                                slots: self.slot_names(idx),
                                residual: residual.to_string(),
                            })
                        }
                        ZeroVerdict::Inconclusive => {
                            self.caveats.push(format!("{name} on ({}) is inconclusive", self.slot_names(idx)))
                        }
                    }
                }
            }
        }
        // Second route to C^a_{bc} through the curvature tensor.
        for a in 0..n {
            for b in 0..n {
                for c in b + 1..n {
                    let mut terms = Vec::new();
                    for d in 0..n {
                        for p in 0..n {
                            for q in 0..n {
                                terms.push(
                                    &self.eig.phi[a][d] * geo.curvature(d, p, q) * &self.eig.x[b][p] * &self.eig.x[c][q],
                                );
                            }
                        }
                    }
                    let residual = (Expr::add(terms) - self.c(a, b, c)).simplify();
                    match z.is_zero(&residual).verdict {
                        ZeroVerdict::Zero => {}
                        ZeroVerdict::NonZero => {
                            return Err(StructureError::ExpansionMismatch {
                                form: curv_name(a, b, c),
                                slots: "curvature route".into(),
                                residual: residual.to_string(),
                            })
                        }
                        ZeroVerdict::Inconclusive => self.caveats.push(format!("{} curvature route is inconclusive", curv_name(a, b, c))),
                    }
                }
            }
        }
        Ok(())
    }

    fn slot_names(&self, idx: &[usize]) -> String {
        idx.iter().map(|&i| self.frame.names[i].clone()).collect::<Vec<_>>().join(", ")
    }

    /// `dt, phi1H.., phi1V..` in frame order.
    pub fn coframe_names(&self) -> Vec<String> {
        let mut names = vec!["dt".to_string()];
        names.extend((0..self.n).map(|b| format!("phi{}H", b + 1)));
        names.extend((0..self.n).map(|b| format!("phi{}V", b + 1)));
        names
    }

    /// Coframe name of slot `i`, used to label form components.
    pub fn slot_label(&self, idx: &[usize]) -> String {
        let names = self.coframe_names();
        idx.iter().map(|&i| names[i].clone()).collect::<Vec<_>>().join("^")
    }

    /// `A^{aV}_{bc} = τ^{aV}_{bc} - 2 τ^{aV}_{cb}`.
    pub fn a_v(&self, a: usize, b: usize, c: usize) -> Expr {
        (self.tv(a, b, c) - Expr::int(2) * self.tv(a, c, b)).simplify()
    }

    /// `A^{aH}_{bc} = τ^{aH}_{bc} - 2 τ^{aH}_{cb}`.
    pub fn a_h(&self, a: usize, b: usize, c: usize) -> Expr {
        (self.th(a, b, c) - Expr::int(2) * self.th(a, c, b)).simplify()
    }

    /// The 1-form `ξ^a_b` in the eigen-coframe.
    pub fn xi(&self, a: usize, b: usize) -> Form {
        let mut f = Form::zero(1, self.dim());
        if a == b {
            f.set(&[0], (Expr::int(-2) * self.tg(a, a)).simplify());
            for c in (0..self.n).filter(|&c| c != a) {
                f.set(&[self.v(c)], self.a_v(a, a, c));
                f.set(&[self.h(c)], self.a_h(a, a, c));
            }
        } else {
            f.set(&[self.v(a)], self.tv(a, b, b).clone());
            f.set(&[self.h(a)], self.th(a, b, b).clone());
        }
        f
    }

    /// `ω^a = φ^{aV} ∧ φ^{aH}`.
    pub fn omega(&self, a: usize) -> Form {
        Form::basis(self.v(a), self.dim()).wedge(&Form::basis(self.h(a), self.dim()))
    }

    /// Frobenius test of the co-distribution spanned by `φ^{aV}, φ^{aH}`.
    pub fn integrability_test(&self, a: usize) -> IntegrabilityResult {
        let n = self.n;
        let others: Vec<usize> = (0..n).filter(|&b| b != a).collect();
        let mut entries: Vec<(String, &Entry)> = Vec::new();
        for &b in &others {
            entries.push((tau_gamma_name(a, b), &self.tau_gamma[a][b]));
        }
        for (name, table) in [(tau_v_name as fn(usize, usize, usize) -> String, &self.tau_v), (tau_h_name, &self.tau_h), (curv_name, &self.curv)] {
            for &b in &others {
                for &c in &others {
                    entries.push((name(a, b, c), &table[a][b][c]));
                }
            }
        }
        let census = Census::of(entries);
        let verdict = match census.verdict {
            ZeroVerdict::Zero => Integrability::Integrable,
            ZeroVerdict::NonZero => Integrability::NonIntegrable,
            ZeroVerdict::Inconclusive => Integrability::Inconclusive,
        };
        IntegrabilityResult { label: a + 1, verdict, witness: census.witness }
    }

    /// All nonzero-valued structure functions, for reporting.
    pub fn nonzero_entries(&self) -> Vec<(String, String)> {
        let n = self.n;
        let mut out = Vec::new();
        for a in 0..n {
            for b in 0..n {
                if !self.tau_gamma[a][b].value.is_zero_node() {
                    out.push((tau_gamma_name(a, b), self.tg(a, b).to_string()));
                }
            }
        }
        for (name, table) in [(tau_v_name as fn(usize, usize, usize) -> String, &self.tau_v), (tau_h_name, &self.tau_h), (curv_name, &self.curv)] {
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        if !table[a][b][c].value.is_zero_node() {
                            out.push((name(a, b, c), table[a][b][c].value.to_string()));
                        }
                    }
                }
            }
        }
        out
    }
}

fn eigen_frame(geo: &Geometry, eig: &EigenData, dphi_v: &[Form], dphi_h: &[Form]) -> Frame {
    let n = geo.n();
    let dim = geo.dim();
    let sf = &geo.frame;
    let combine = |coef: &[Expr], rows: &dyn Fn(usize) -> usize, of: &[Vec<Expr>]| -> Vec<Expr> {
        (0..dim).map(|m| Expr::add((0..n).map(|c| &coef[c] * &of[rows(c)][m]).collect()).simplify()).collect()
    };
    let mut names = vec!["Gamma".to_string()];
    names.extend((0..n).map(|b| format!("X{}H", b + 1)));
    names.extend((0..n).map(|b| format!("X{}V", b + 1)));

    let mut vectors = vec![sf.vectors[0].clone()];
    vectors.extend((0..n).map(|b| combine(&eig.x[b], &|c| geo.h_index(c), &sf.vectors)));
    vectors.extend((0..n).map(|b| combine(&eig.x[b], &|c| geo.v_index(c), &sf.vectors)));
    let mut covectors = vec![sf.covectors[0].clone()];
    covectors.extend((0..n).map(|a| combine(&eig.phi[a], &|c| geo.h_index(c), &sf.covectors)));
    covectors.extend((0..n).map(|a| combine(&eig.phi[a], &|c| geo.v_index(c), &sf.covectors)));

    let minus = Expr::int(-1);
    let mut structure = vec![Form::zero(2, dim)];
    structure.extend(dphi_h.iter().map(|f| f.scale(&minus)));
    structure.extend(dphi_v.iter().map(|f| f.scale(&minus)));
    Frame::with_structure(names, sf.coords.clone(), vectors, covectors, structure)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::expr::{parse, DomainBox};
    use crate::geometry::{tests::sode, Geometry};

    pub(crate) fn ex1() -> Geometry {
        Geometry::new(sode(&["x", "y", "z"], &["u", "v", "w"], &["x*v", "u", "0"], &[("v", 1.0, 4.0), ("u", 0.5, 2.0), ("x", 0.5, 2.0)]))
    }

    pub(crate) fn ex2() -> Geometry {
        Geometry::new(sode(&["x", "y", "z"], &["u", "v", "w"], &["z*t", "0", "x"], &[("t", 1.0, 4.0)]))
    }

    pub(crate) fn ex3() -> Geometry {
        Geometry::new(sode(&["x", "y", "z"], &["u", "v", "w"], &["x*w", "x", "x"], &[("u", -2.0, -1.0), ("w", 0.5, 2.0)]))
    }

    fn p(geo: &Geometry, s: &str) -> Expr {
        parse(s, &geo.sode.symbols()).unwrap()
    }

    fn supplied(geo: &Geometry, lambda: &[&str], vectors: &[&[&str]]) -> EigenInput {
        EigenInput::Supplied {
            lambda: lambda.iter().map(|s| p(geo, s)).collect(),
            vectors: vectors.iter().map(|v| v.iter().map(|s| p(geo, s)).collect()).collect(),
        }
    }

    fn diag(r: Resolution) -> EigenData {
        match r {
            Resolution::Diagonalizable(d) => d,
            other => panic!("expected diagonalizable, got {other:?}"),
        }
    }

    pub(crate) fn ex1_sf() -> StructureFunctions {
        let g = ex1();
        let inp = supplied(&g, &["-x/4", "-(4*v+x)/4", "0"], &[&["u/v^(3/4)", "2*v^(1/4)", "0"], &["v^(-1/4)", "0", "0"], &["0", "0", "1"]]);
        let e = diag(resolve_eigendata(&g, &inp, Normalize::None).unwrap());
        StructureFunctions::new(&g, e).unwrap()
    }

    pub(crate) fn ex2_sf() -> StructureFunctions {
        let g = ex2();
        let inp = supplied(&g, &["sqrt(t)", "-sqrt(t)", "0"], &[&["-sqrt(t)", "0", "1"], &["sqrt(t)", "0", "1"], &["0", "1", "0"]]);
        let e = diag(resolve_eigendata(&g, &inp, Normalize::None).unwrap());
        StructureFunctions::new(&g, e).unwrap()
    }

    pub(crate) fn ex3_sf() -> StructureFunctions {
        let g = ex3();
        let s = "sqrt(-2*u+w^2)";
        let inp = supplied(
            &g,
            &[&format!("({s}-w)/2"), &format!("(-{s}-w)/2"), "0"],
            &[&[&format!("-{s}+w"), "2", "2"], &[&format!("{s}+w"), "2", "2"], &["0", "1", "0"]],
        );
        let e = diag(resolve_eigendata(&g, &inp, Normalize::None).unwrap());
        StructureFunctions::new(&g, e).unwrap()
    }

    fn assert_same(geo_z: &ZeroContext, a: &Expr, b: &Expr) {
        assert!(geo_z.is_zero(&(a - b)).is_zero(), "{a} != {b}");
    }

    #[test]
    fn example2_eigendata_and_inverse() {
        let g = ex2();
        let sf = ex2_sf();
        let e = &sf.eig;
        assert_eq!(e.phi[0], vec![p(&g, "-1/(2*sqrt(t))"), p(&g, "0"), p(&g, "1/2")]);
        assert_eq!(e.phi[1], vec![p(&g, "1/(2*sqrt(t))"), p(&g, "0"), p(&g, "1/2")]);
        assert_eq!(e.phi[2], vec![p(&g, "0"), p(&g, "1"), p(&g, "0")]);
        assert!(e.all_distinct());
        // Numeric inverse oracle at t = 4.
        let st = 2.0;
        let m = [[-st, st, 0.0], [0.0, 0.0, 1.0], [1.0, 1.0, 0.0]];
        let pt: Point = [("t".to_string(), 4.0)].into();
        for a in 0..3 {
            for b in 0..3 {
                let s: f64 = (0..3).map(|c| e.phi[a][c].eval(&pt).unwrap() * m[c][b]).sum();
                assert!((s - if a == b { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn example2_tau_table() {
        let g = ex2();
        let sf = ex2_sf();
        let q = p(&g, "1/(4*t)");
        let mq = p(&g, "-1/(4*t)");
        for a in 0..3 {
            for b in 0..3 {
                let want = match (a, b) {
                    (0, 0) | (1, 1) => q.clone(),
                    (0, 1) | (1, 0) => mq.clone(),
                    _ => Expr::zero(),
                };
                assert_eq!(sf.tg(a, b), &want, "tau^{}G_{}", a + 1, b + 1);
                for c in 0..3 {
                    assert!(sf.tau_v[a][b][c].test.is_zero());
                    assert!(sf.tau_h[a][b][c].test.is_zero());
                    assert!(sf.curv[a][b][c].test.is_zero());
                }
            }
        }
        assert_eq!(sf.xi(0, 0).get(&[0]), p(&g, "-1/(2*t)"));
    }

    #[test]
    fn example1_spot_values() {
        let g = ex1();
        let sf = ex1_sf();
        let z = g.zctx();
        assert_same(z, sf.tg(0, 1), &p(&g, "-sqrt(v)/(4*v)"));
        assert_same(z, sf.tg(1, 0), &p(&g, "-3*u^2/(4*v*sqrt(v))"));
        assert_same(z, sf.c(1, 0, 1), &p(&g, "-v^(1/4)"));
        assert_same(z, sf.tv(0, 0, 0), &p(&g, "1/(2*v^(3/4))"));
        assert_same(z, sf.th(1, 1, 1), &p(&g, "-1/(8*v*v^(1/4))"));
        assert_same(z, sf.tv(1, 1, 0), &p(&g, "v^(-3/4)"));
        assert_same(z, sf.th(1, 1, 0), &p(&g, "-u/(2*v^(7/4))"));
        assert!(sf.tau_v[1][1][1].test.is_zero());
    }

    #[test]
    fn literal_rescaled_vector_is_rejected() {
        let g = ex1();
        let inp = supplied(&g, &["-x/4", "-(4*v+x)/4", "0"], &[&["u/v^(3/4)", "v^(1/4)", "0"], &["v^(-1/4)", "0", "0"], &["0", "0", "1"]]);
        match resolve_eigendata(&g, &inp, Normalize::None) {
            Err(EigenError::EigenVerificationFailed { vector: 1, component: 1, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn free_motion_identity_eigendata() {
        let g = Geometry::new(sode(&["x", "y"], &["u", "v"], &["0", "0"], &[]));
        let inp = supplied(&g, &["0", "0"], &[&["1", "0"], &["0", "1"]]);
        let e = diag(resolve_eigendata(&g, &inp, Normalize::None).unwrap());
        assert_eq!(e.phi, vec![vec![Expr::one(), Expr::zero()], vec![Expr::zero(), Expr::one()]]);
        assert!(e.has_repeated());
        let sf = StructureFunctions::new(&g, e).unwrap();
        assert!(sf.nonzero_entries().is_empty());
        for a in 0..2 {
            assert_eq!(sf.integrability_test(a).verdict, Integrability::Integrable);
        }
    }

    #[test]
    fn integrability_census() {
        let sf1 = ex1_sf();
        assert_eq!(sf1.integrability_test(2).verdict, Integrability::Integrable);
        let r = sf1.integrability_test(0);
        assert_eq!(r.verdict, Integrability::NonIntegrable);
        assert!(r.witness.is_some());
        let sf3 = ex3_sf();
        assert_eq!(sf3.integrability_test(0).verdict, Integrability::NonIntegrable);
        assert_eq!(sf3.integrability_test(2).verdict, Integrability::Integrable);
    }

    #[test]
    fn rescaling_keeps_verdicts() {
        let g = ex2();
        let inp = supplied(&g, &["sqrt(t)", "-sqrt(t)", "0"], &[&["-t*sqrt(t)", "0", "t"], &["sqrt(t)", "0", "1"], &["0", "1", "0"]]);
        let e = diag(resolve_eigendata(&g, &inp, Normalize::None).unwrap());
        let scaled = StructureFunctions::new(&g, e).unwrap();
        let base = ex2_sf();
        for a in 0..3 {
            assert_eq!(scaled.integrability_test(a).verdict, base.integrability_test(a).verdict);
            for b in (0..3).filter(|&b| b != a) {
                assert_eq!(scaled.tau_gamma[a][b].verdict(), base.tau_gamma[a][b].verdict());
            }
        }
    }

    #[test]
    fn automatic_solve_example2() {
        let g = ex2();
        let e = diag(resolve_eigendata(&g, &EigenInput::Auto, Normalize::None).unwrap());
        let mut got: Vec<String> = e.lambda.iter().map(|l| l.to_string()).collect();
        got.sort();
        assert_eq!(got, vec!["-t^(1/2)", "0", "t^(1/2)"]);
        assert!(e.all_distinct());
        StructureFunctions::new(&g, e).unwrap();
    }

    #[test]
    fn automatic_solve_example3() {
        let g = ex3();
        let e = diag(resolve_eigendata(&g, &EigenInput::Auto, Normalize::UnitFirstComponent).unwrap());
        let z = g.zctx();
        assert_same(z, &e.lambda[2], &Expr::zero());
        assert_same(z, &(&e.lambda[0] + &e.lambda[1]), &p(&g, "-w"));
        assert!(e.all_distinct());
        let sf = StructureFunctions::new(&g, e).unwrap();
        assert_eq!(sf.integrability_test(2).verdict, Integrability::Integrable);
    }

    #[test]
    fn automatic_solve_detects_repeated_and_defective() {
        let g = Geometry::new(sode(&["x", "y", "z"], &["u", "v", "w"], &["-x", "-y", "0"], &[]));
        let e = diag(resolve_eigendata(&g, &EigenInput::Auto, Normalize::None).unwrap());
        assert!(e.has_repeated());
        // ẍ = y, ÿ = 0 has a nilpotent Jacobi endomorphism.
        let g = Geometry::new(sode(&["x", "y"], &["u", "v"], &["y", "0"], &[]));
        assert!(matches!(resolve_eigendata(&g, &EigenInput::Auto, Normalize::None), Ok(Resolution::NonDiagonalizable { .. })));
    }

    #[test]
    fn complex_spectrum_is_refused() {
        // ẍ = y, ÿ = -x rotates: eigenvalues ±i.
        let g = Geometry::new(sode(&["x", "y"], &["u", "v"], &["y", "-x"], &[]));
        assert!(matches!(resolve_eigendata(&g, &EigenInput::Auto, Normalize::None), Err(EigenError::AutoSolveUnavailable(_))));
    }

    #[test]
    fn singular_eigenvectors_are_refused() {
        let g = ex2();
        let inp = supplied(&g, &["sqrt(t)", "sqrt(t)", "0"], &[&["-sqrt(t)", "0", "1"], &["-sqrt(t)", "0", "1"], &["0", "1", "0"]]);
        assert_eq!(resolve_eigendata(&g, &inp, Normalize::None).unwrap_err(), EigenError::SingularEigenvectorMatrix);
    }

    #[test]
    fn xi_matches_domega_readoff() {
        for sf in [ex1_sf(), ex2_sf(), ex3_sf()] {
            let n = sf.n;
            let z = ZeroContext::new(DomainBox::new(vec![("t".into(), 1.0, 4.0), ("v".into(), 1.0, 4.0), ("u".into(), -2.0, -1.0), ("w".into(), 0.5, 2.0), ("x".into(), 0.5, 2.0)]), 8, 1);
            for a in 0..n {
                let dom = sf.dphi_v[a].wedge(&Form::basis(sf.h(a), sf.dim())).sub(&Form::basis(sf.v(a), sf.dim()).wedge(&sf.dphi_h[a]));
                let xi = sf.xi(a, a);
                for y in 0..sf.dim() {
                    if y == sf.v(a) || y == sf.h(a) {
                        continue;
                    }
                    let r = (dom.get(&[y, sf.v(a), sf.h(a)]) - xi.get(&[y])).simplify();
                    assert!(!z.is_zero(&r).is_nonzero(), "xi^{a}_{a} slot {y}: {r}");
                }
                for b in (0..n).filter(|&b| b != a) {
                    let xb = sf.xi(a, b);
                    for y in [sf.v(a), sf.h(a)] {
                        let r = (dom.get(&[y, sf.v(b), sf.h(b)]) - xb.get(&[y])).simplify();
                        assert!(!z.is_zero(&r).is_nonzero(), "xi^{a}_{b} slot {y}: {r}");
                    }
                }
            }
        }
    }
}
