//! Differential-ideal classification of the eigen co-distributions.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::eigen::{
    curv_name, resolve_eigendata, tau_gamma_name, tau_h_name, tau_v_name, Census, EigenError, EigenInput, Integrability,
    IntegrabilityResult, NamedWitness, Normalize, Resolution, StructureError, StructureFunctions,
};
use crate::expr::{Expr, ZeroContext, ZeroVerdict};
use crate::forms::{combinations, Form};
use crate::geometry::Geometry;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CaseLabel {
    A,
    #[serde(rename = "B-q0")]
    BQ0,
    #[serde(rename = "B-q1")]
    BQ1,
    BNII0,
    BNII1,
    #[serde(rename = "B-qN")]
    BQN,
    #[serde(rename = "B-NoSolution")]
    BNoSolution,
    #[serde(rename = "C-detected")]
    CDetected,
    #[serde(rename = "D-detected")]
    DDetected,
    Inconclusive,
}

impl fmt::Display for CaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CaseLabel::A => "A",
            CaseLabel::BQ0 => "B-q0",
            CaseLabel::BQ1 => "B-q1",
            CaseLabel::BNII0 => "BNII0",
            CaseLabel::BNII1 => "BNII1",
            CaseLabel::BQN => "B-qN",
            CaseLabel::BNoSolution => "B-NoSolution",
            CaseLabel::CDetected => "C-detected",
            CaseLabel::DDetected => "D-detected",
            CaseLabel::Inconclusive => "Inconclusive",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Variational,
    NotVariational,
    OutOfScope,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// One entry of the condition ledger. `verdict` is the zero test of the condition's expressions.
#[derive(Debug, Clone, Serialize)]
pub struct Condition {
    pub id: String,
    pub paper_tag: String,
    pub verdict: ZeroVerdict,
    pub witness: Option<NamedWitness>,
    pub note: Option<String>,
}

impl Condition {
    fn from_census(id: &str, tag: &str, census: Census) -> Condition {
        let note = (!census.inconclusive.is_empty()).then(|| format!("inconclusive: {}", census.inconclusive.join(", ")));
        Condition { id: id.into(), paper_tag: tag.into(), verdict: census.verdict, witness: census.witness, note }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Generality {
    pub s1: usize,
    pub s2: usize,
    pub t: usize,
    pub text: String,
}

/// A span of 2-forms in the eigen-coframe.
#[derive(Debug, Clone, Serialize)]
pub struct TwoFormModule {
    pub step: usize,
    pub labels: Vec<String>,
    #[serde(skip)]
    pub basis: Vec<Form>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DegeneracyCheck {
    /// Labels `a` (1-based) with no `ω^a` component in any basis form.
    pub missing: Vec<usize>,
    pub regular: bool,
    /// Whether `∧ⁿ(Σ basis)` is nonzero at some sample point.
    pub maximal_rank: bool,
}

/// Data of the rank-one branch needed to verify Pfaffian solutions.
#[derive(Debug, Clone)]
pub struct Bnii1Data {
    /// Non-integrable pair (0-based), playing the roles of labels 1 and 2.
    pub pair: (usize, usize),
    pub alphas: Vec<usize>,
    pub h2: Expr,
    /// `xi_tilde[c] = ξ^i_c + h₂ ξ^j_c`.
    pub xi_tilde: Vec<Form>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Classification {
    pub case: CaseLabel,
    pub q: Option<usize>,
    pub integrability: Vec<IntegrabilityResult>,
    /// 1-based labels of the non-integrable co-distributions.
    pub non_integrable: Vec<usize>,
    pub rank_a1: Option<usize>,
    pub h2: Option<String>,
    pub conditions: Vec<Condition>,
    /// Printed 1-forms of the Pfaffian system.
    pub pfaffian: BTreeMap<String, String>,
    pub module: Option<TwoFormModule>,
    pub degeneracy: Option<DegeneracyCheck>,
    pub generality: Option<Generality>,
    pub verdict: Verdict,
    pub caveats: Vec<String>,
    #[serde(skip)]
    pub bnii1: Option<Bnii1Data>,
}

impl Classification {
    fn new(case: CaseLabel, verdict: Verdict) -> Classification {
        Classification {
            case,
            q: None,
            integrability: Vec::new(),
            non_integrable: Vec::new(),
            rank_a1: None,
            h2: None,
            conditions: Vec::new(),
            pfaffian: BTreeMap::new(),
            module: None,
            degeneracy: None,
            generality: None,
            verdict,
            caveats: Vec::new(),
            bnii1: None,
        }
    }

    pub fn condition(&self, id: &str) -> Option<&Condition> {
        self.conditions.iter().find(|c| c.id == id)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error(transparent)]
    Structure(#[from] StructureError),
}

/// Everything computed past the geometry stage.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub resolution: Option<Resolution>,
    pub sf: Option<StructureFunctions>,
    pub classification: Classification,
}

/// `Φ - Φ¹₁ I ≡ 0`.
pub fn case_a_condition(geo: &Geometry) -> Condition {
    let n = geo.n();
    let l = &geo.phi[0][0];
    let items = (0..n).flat_map(|a| {
        (0..n).map(move |b| {
            let e = if a == b { &geo.phi[a][b] - l } else { geo.phi[a][b].clone() };
            (format!("Phi^{}_{} - lambda delta", a + 1, b + 1), e)
        })
    });
    Condition::from_census("C-A", "multiple-of-identity", Census::check(geo.zctx(), items))
}

/// Zero verdict iff `τ^{aΓ}_b = 0` and `τ^{aV}_{bc} = 0` for all distinct `a, b, c`.
pub fn sigma_tilde1_di_test(sf: &StructureFunctions) -> Census {
    let n = sf.n;
    let mut entries = Vec::new();
    for a in 0..n {
        for b in (0..n).filter(|&b| b != a) {
            entries.push((tau_gamma_name(a, b), &sf.tau_gamma[a][b]));
        }
    }
    for a in 0..n {
        for b in (0..n).filter(|&b| b != a) {
            for c in (0..n).filter(|&c| c != a && c != b) {
                entries.push((tau_v_name(a, b, c), &sf.tau_v[a][b][c]));
            }
        }
    }
    Census::of(entries)
}

/// Cyclic curvature condition for `Σ r_d ω^d` to lie in `Σ¹`.
pub fn sigma1_membership(r: &[Expr], sf: &StructureFunctions, z: &ZeroContext) -> Census {
    let items = combinations(sf.n, 3).into_iter().map(|t| {
        let (a, b, c) = (t[0], t[1], t[2]);
        let e = &r[a] * sf.c(a, b, c) + &r[b] * sf.c(b, c, a) + &r[c] * sf.c(c, a, b);
        (format!("cyclic C over ({},{},{})", a + 1, b + 1, c + 1), e)
    });
    Census::check(z, items)
}

/// Cartan characters of the rank-one tableau and the resulting generality statement.
pub fn cartan_generality(n: usize) -> Generality {
    let s1 = n.saturating_sub(2);
    let s2 = s1;
    let t = 3 * s1;
    assert_eq!(t, s1 + 2 * s2, "involutivity identity");
    let text = match s1 {
        0 => "no free functions at this level".to_string(),
        1 => "1 function of 2 variables".to_string(),
        k => format!("{k} functions of 2 variables"),
    };
    Generality { s1, s2, t, text }
}

/// Regularity of a final module and maximal-rank feasibility of its generic element.
pub fn degenerate_check(module: &TwoFormModule, sf: &StructureFunctions, z: &ZeroContext) -> DegeneracyCheck {
    let n = sf.n;
    let missing: Vec<usize> = (0..n)
        .filter(|&a| !module.basis.iter().any(|f| z.is_zero(&f.get(&[sf.v(a), sf.h(a)])).is_nonzero()))
        .map(|a| a + 1)
        .collect();
    let maximal_rank = match module.basis.split_first() {
        None => false,
        Some((first, rest)) => {
            let sum = rest.iter().fold(first.clone(), |acc, f| acc.add(f));
            let top = (1..n).fold(sum.clone(), |acc, _| acc.wedge(&sum));
            z.points().iter().any(|p| top.components().any(|(_, e)| e.eval(p).map(|v| v.abs() > 1e-9).unwrap_or(false)))
        }
    };
    DegeneracyCheck { regular: missing.is_empty(), missing, maximal_rank }
}

/// Runs eigen resolution, structure functions and the classification.
pub fn analyze(geo: &Geometry, input: &EigenInput, normalize: Normalize) -> Result<Analysis, AnalysisError> {
    let ca = case_a_condition(geo);
    if ca.verdict == ZeroVerdict::Zero {
        let mut c = Classification::new(CaseLabel::A, Verdict::OutOfScope);
        c.conditions.push(ca);
        c.caveats.push(
            "Case A: the Jacobi endomorphism is a multiple of the identity; the system is variational with multipliers \
             depending on arbitrary functions, and this analysis is out of scope"
                .into(),
        );
        return Ok(Analysis { resolution: None, sf: None, classification: c });
    }
    let resolution = match resolve_eigendata(geo, input, normalize) {
        Ok(r) => r,
        Err(EigenError::AutoSolveUnavailable(why)) => {
            let mut c = Classification::new(CaseLabel::Inconclusive, Verdict::Inconclusive);
            c.conditions.push(ca);
            c.caveats.push(format!("automatic eigen-solve unavailable ({why}); supply eigendata in the problem file"));
            return Ok(Analysis { resolution: None, sf: None, classification: c });
        }
        Err(e) => return Err(e.into()),
    };
    let eig = match &resolution {
        Resolution::NonDiagonalizable { note, .. } => {
            let mut c = Classification::new(CaseLabel::DDetected, Verdict::OutOfScope);
            c.conditions.push(ca);
            c.caveats.push(format!("Case D: {note}; analysis out of scope"));
            return Ok(Analysis { resolution: Some(resolution), sf: None, classification: c });
        }
        Resolution::Diagonalizable(e) => e.clone(),
    };
    if eig.has_repeated() {
        let mut c = Classification::new(CaseLabel::CDetected, Verdict::OutOfScope);
        c.conditions.push(ca);
        c.caveats.push("Case C: diagonalizable with a repeated eigenvalue; analysis out of scope".into());
        return Ok(Analysis { resolution: Some(resolution), sf: None, classification: c });
    }
    if !eig.all_distinct() {
        let mut c = Classification::new(CaseLabel::Inconclusive, Verdict::Inconclusive);
        c.conditions.push(ca);
        c.caveats.push("distinctness of eigenvalues could not be decided".into());
        return Ok(Analysis { resolution: Some(resolution), sf: None, classification: c });
    }
    let sf = StructureFunctions::new(geo, eig)?;
    let mut c = classify_case_b(geo, &sf);
    c.conditions.insert(0, ca);
    c.caveats.extend(sf.eig.caveats.iter().cloned());
    c.caveats.extend(sf.caveats.iter().cloned());
    Ok(Analysis { resolution: Some(resolution), sf: Some(sf), classification: c })
}

/// Classification once Φ is known to have distinct eigenvalues.
pub fn classify_case_b(geo: &Geometry, sf: &StructureFunctions) -> Classification {
    let n = sf.n;
    let integrability: Vec<IntegrabilityResult> = (0..n).map(|a| sf.integrability_test(a)).collect();
    let di = Condition::from_census("C-DI1", "sigma-tilde-1-differential-ideal", sigma_tilde1_di_test(sf));
    let non_integrable: Vec<usize> =
        integrability.iter().filter(|r| r.verdict == Integrability::NonIntegrable).map(|r| r.label - 1).collect();
    let undecided = integrability.iter().any(|r| r.verdict == Integrability::Inconclusive);
    let q = non_integrable.len();

    let mut c = Classification::new(CaseLabel::Inconclusive, Verdict::Inconclusive);
    c.integrability = integrability;
    c.non_integrable = non_integrable.iter().map(|a| a + 1).collect();
    let di_verdict = di.verdict;
    c.conditions.push(di);
    if undecided {
        c.caveats.push("integrability of some eigen co-distribution could not be decided".into());
        return c;
    }
    c.q = Some(q);
    match q {
        0 => {
            c.case = CaseLabel::BQ0;
            c.verdict = Verdict::OutOfScope;
            c.caveats.push("every eigen co-distribution is integrable; the separable case is out of scope".into());
        }
        1 => {
            c.case = CaseLabel::BQ1;
            match di_verdict {
                ZeroVerdict::Zero => {
                    c.verdict = Verdict::OutOfScope;
                    c.caveats.push("one non-integrable co-distribution with a differential ideal at step 1; existence conditions out of scope".into());
                }
                ZeroVerdict::NonZero => {
                    c.verdict = Verdict::NotVariational;
                    c.caveats.push("one non-integrable co-distribution and no differential ideal by step 1: no non-degenerate solution".into());
                }
                ZeroVerdict::Inconclusive => {}
            }
        }
        2 => bnii(geo, sf, (non_integrable[0], non_integrable[1]), di_verdict, &mut c),
        _ => {
            c.case = CaseLabel::BQN;
            c.verdict = Verdict::OutOfScope;
            c.caveats.push(format!("{q} non-integrable co-distributions; only the step-1 differential-ideal test is reported"));
        }
    }
    c
}

struct A1Row {
    name: String,
    p: Expr,
    q: Expr,
}

fn a1_rows(sf: &StructureFunctions, i: usize, j: usize, alphas: &[usize]) -> Vec<A1Row> {
    let row = |name: String, p: Expr, q: Expr| A1Row { name, p: p.simplify(), q: q.simplify() };
    let mut rows = vec![row("tauG".into(), sf.tg(i, j).clone(), sf.tg(j, i).clone())];
    for &a in alphas {
        let l = a + 1;
        rows.push(row(format!("tauG1[{l}]"), sf.tg(i, a).clone(), Expr::zero()));
        rows.push(row(format!("tauG2[{l}]"), Expr::zero(), sf.tg(j, a).clone()));
        rows.push(row(format!("tauV-antisym[{l}]"), sf.tv(i, j, a) - sf.tv(i, a, j), -sf.tv(j, a, i)));
        rows.push(row(format!("tauV[{l}]"), sf.tv(i, j, a).clone(), -sf.tv(j, i, a)));
        rows.push(row(format!("tauH-antisym[{l}]"), sf.th(i, j, a) - sf.th(i, a, j), -sf.th(j, a, i)));
        rows.push(row(format!("tauH[{l}]"), sf.th(i, j, a).clone(), -sf.th(j, i, a)));
        rows.push(row(format!("C[{l}]"), sf.c(i, j, a).clone(), -sf.c(j, i, a)));
    }
    rows
}

/// Generic rank of the coefficient matrix, or `None` if undecided; the witness proves the lower bound.
fn a1_rank(rows: &[A1Row], z: &ZeroContext) -> (Option<usize>, Option<NamedWitness>) {
    let entries = rows.iter().flat_map(|r| [(format!("{}.r1", r.name), r.p.clone()), (format!("{}.r2", r.name), r.q.clone())]);
    let first = Census::check(z, entries);
    match first.verdict {
        ZeroVerdict::Zero => return (Some(0), None),
        ZeroVerdict::Inconclusive => return (None, None),
        ZeroVerdict::NonZero => {}
    }
    let minors = combinations(rows.len(), 2).into_iter().map(|k| {
        let (a, b) = (&rows[k[0]], &rows[k[1]]);
        (format!("minor({}, {})", a.name, b.name), &a.p * &b.q - &a.q * &b.p)
    });
    let second = Census::check(z, minors);
    match second.verdict {
        ZeroVerdict::Zero => (Some(1), first.witness),
        ZeroVerdict::NonZero => (Some(2), second.witness),
        ZeroVerdict::Inconclusive => (None, None),
    }
}

fn bnii(geo: &Geometry, sf: &StructureFunctions, (i, j): (usize, usize), di: ZeroVerdict, c: &mut Classification) {
    let n = sf.n;
    let z = geo.zctx();
    let alphas: Vec<usize> = (0..n).filter(|&a| a != i && a != j).collect();
    if i != 0 || j != 1 {
        c.caveats.push(format!("non-integrable labels {} and {} play the roles of 1 and 2", i + 1, j + 1));
    }
    let rows = a1_rows(sf, i, j, &alphas);
    let (rank, witness) = a1_rank(&rows, z);
    c.rank_a1 = rank;
    match rank {
        None => {
            c.caveats.push("rank of the coefficient matrix could not be decided".into());
        }
        Some(0) => {
            if di == ZeroVerdict::Zero {
                c.case = CaseLabel::BNII0;
                c.verdict = Verdict::OutOfScope;
                c.generality = Some(cartan_generality(n));
                let module = TwoFormModule {
                    step: 1,
                    labels: (0..n).map(|a| format!("omega^{}", a + 1)).collect(),
                    basis: (0..n).map(|a| sf.omega(a)).collect(),
                };
                c.degeneracy = Some(degenerate_check(&module, sf, z));
                c.module = Some(module);
                c.caveats.push(
                    "the step-1 module is a differential ideal; further existence conditions are external to this analysis".into(),
                );
            } else {
                c.caveats.push("coefficient matrix vanishes but the step-1 module is not a differential ideal".into());
            }
        }
        Some(2) => {
            c.case = CaseLabel::BNoSolution;
            c.verdict = Verdict::NotVariational;
            c.conditions.push(Condition {
                id: "C-RANK".into(),
                paper_tag: "coefficient-matrix-rank".into(),
                verdict: ZeroVerdict::NonZero,
                witness,
                note: Some("rank 2 forces r1 = r2 = 0: no non-degenerate solution".into()),
            });
        }
        Some(_) => bnii1(geo, sf, (i, j), &alphas, &rows, c),
    }
}

fn bnii1(geo: &Geometry, sf: &StructureFunctions, (i, j): (usize, usize), alphas: &[usize], rows: &[A1Row], c: &mut Classification) {
    let z = geo.zctx();
    c.case = CaseLabel::BNII1;
    let c51 = Census::check(z, alphas.iter().flat_map(|&a| [(tau_gamma_name(i, a), sf.tg(i, a).clone()), (tau_gamma_name(j, a), sf.tg(j, a).clone())]));
    c.conditions.push(Condition::from_census("C-51", "tau-gamma-alpha-vanish", c51));

    // h₂ from the first row whose second entry is nonzero: r₁ p + r₂ q = 0.
    let h2 = rows
        .iter()
        .find(|r| z.is_zero(&r.q).is_nonzero())
        .map(|r| (-(&r.p) / &r.q).simplify());
    let Some(h2) = h2 else {
        c.conditions.push(Condition {
            id: "C-52".into(),
            paper_tag: "ratio-consistency".into(),
            verdict: ZeroVerdict::NonZero,
            witness: None,
            note: Some("no ratio is defined: r1 is forced to vanish and the solution is degenerate".into()),
        });
        finish(c);
        return;
    };
    c.h2 = Some(h2.to_string());
    let mut ratio_items = Vec::new();
    let mut mismatch = None;
    for r in rows {
        let (pz, qz) = (z.is_zero(&r.p).verdict, z.is_zero(&r.q).verdict);
        match (pz, qz) {
            (ZeroVerdict::Zero, ZeroVerdict::Zero) => {}
            (ZeroVerdict::NonZero, ZeroVerdict::Zero) | (ZeroVerdict::Zero, ZeroVerdict::NonZero) => {
                let e = if pz == ZeroVerdict::NonZero { r.p.clone() } else { r.q.clone() };
                let test = z.is_zero(&e);
                mismatch = NamedWitness::from_test(format!("{} has one vanishing entry", r.name), &e, &test);
                break;
            }
            _ => ratio_items.push((format!("{}: r1 + h2 r2 residual", r.name), &r.p + &h2 * &r.q)),
        }
    }
    let c52 = match mismatch {
        Some(w) => Census { verdict: ZeroVerdict::NonZero, witness: Some(w), inconclusive: vec![] },
        None => {
            let mut census = Census::check(z, ratio_items);
            if census.verdict != ZeroVerdict::NonZero && !z.is_zero(&h2).is_nonzero() {
                census.verdict = ZeroVerdict::NonZero;
                census.witness = None;
                census.inconclusive.push("h2 does not test nonzero".into());
            }
            census
        }
    };
    c.conditions.push(Condition::from_census("C-52", "ratio-consistency", c52));

    let names = sf.coframe_names();
    let frame = &sf.frame;
    // η = dh₂ + ξ¹₂ + h₂(ξ²₂ − ξ¹₁), modulo φ^{2V}, φ^{2H}.
    let eta = frame.d_function(&h2).add(&sf.xi(i, j)).add(&sf.xi(j, j).sub(&sf.xi(i, i)).scale(&h2)).simplified();
    let c56 = form_census(z, sf, "eta", &eta.modulo(&[sf.v(j), sf.h(j)]));
    c.conditions.push(Condition::from_census("C-56", "xi-congruence", c56));

    let xi_tilde: Vec<Form> = (0..sf.n).map(|k| sf.xi(i, k).add(&sf.xi(j, k).scale(&h2)).simplified()).collect();
    let c510 = form_census(z, sf, "d(xi~1_1)", &frame.d(&xi_tilde[i]));
    c.conditions.push(Condition::from_census("C-510", "xi-tilde-closed", c510));

    let mut c511 = Census::zero();
    for &a in alphas {
        let torsion = sf.xi(a, a).sub(&xi_tilde[i]).wedge(&xi_tilde[a]).add(&frame.d(&xi_tilde[a])).simplified();
        let census = form_census(z, sf, &format!("torsion[{}]", a + 1), &torsion.modulo(&[sf.v(a), sf.h(a)]));
        c511.inconclusive.extend(census.inconclusive.iter().cloned());
        match census.verdict {
            ZeroVerdict::NonZero => {
                c511 = census;
                break;
            }
            ZeroVerdict::Inconclusive => c511.verdict = ZeroVerdict::Inconclusive,
            ZeroVerdict::Zero => {}
        }
    }
    c.conditions.push(Condition::from_census("C-511", "torsion-vanish", c511));

    c.pfaffian.insert("h2".into(), h2.to_string());
    c.pfaffian.insert("xi~1_1".into(), xi_tilde[i].render(&names));
    for &a in alphas {
        c.pfaffian.insert(format!("xi~1_{}", a + 1), xi_tilde[a].render(&names));
        c.pfaffian.insert(format!("xi^{}_{}", a + 1, a + 1), sf.xi(a, a).simplified().render(&names));
    }
    let mut basis = vec![sf.omega(i).add(&sf.omega(j).scale(&h2))];
    let mut labels = vec![format!("omega^{} + h2 omega^{}", i + 1, j + 1)];
    for &a in alphas {
        basis.push(sf.omega(a));
        labels.push(format!("omega^{}", a + 1));
    }
    let module = TwoFormModule { step: 2, labels, basis };
    c.degeneracy = Some(degenerate_check(&module, sf, z));
    c.module = Some(module);
    c.bnii1 = Some(Bnii1Data { pair: (i, j), alphas: alphas.to_vec(), h2, xi_tilde });
    finish(c);
    if c.verdict == Verdict::Variational {
        c.generality = Some(cartan_generality(sf.n));
    }
}

fn finish(c: &mut Classification) {
    let relevant = ["C-51", "C-52", "C-56", "C-510", "C-511"];
    let verdicts: Vec<ZeroVerdict> = c.conditions.iter().filter(|x| relevant.contains(&x.id.as_str())).map(|x| x.verdict).collect();
    c.verdict = if verdicts.contains(&ZeroVerdict::NonZero) {
        Verdict::NotVariational
    } else if verdicts.contains(&ZeroVerdict::Inconclusive) {
        Verdict::Inconclusive
    } else {
        Verdict::Variational
    };
    if c.verdict == Verdict::NotVariational {
        c.caveats.push("an existence condition fails: no regular solution".into());
    }
}

/// Conjunction over all stored components of a form, labelled by coframe slot.
pub fn form_census(z: &ZeroContext, sf: &StructureFunctions, name: &str, f: &Form) -> Census {
    Census::check(z, f.components().map(|(k, e)| (format!("{name} on {}", sf.slot_label(k)), e.clone())))
}

/// Names of every structure function that enters the coefficient matrix, for reports.
pub fn a1_entry_names(i: usize, j: usize, alphas: &[usize]) -> Vec<String> {
    let mut out = vec![tau_gamma_name(i, j), tau_gamma_name(j, i)];
    for &a in alphas {
        out.extend([tau_v_name(i, j, a), tau_h_name(i, j, a), curv_name(i, j, a)]);
    }
    out
}
