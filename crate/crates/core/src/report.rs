//! Pipeline orchestration and the analysis report.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::classify::{analyze, AnalysisError, Bnii1Data, Classification, Verdict};
use crate::eigen::{resolve_eigendata, EigenError, EigenSource, Resolution, StructureFunctions};
use crate::expr::{Expr, ZeroVerdict};
use crate::helmholtz::{check_closed_form, check_helmholtz, r_to_g, verify_pfaffian_solution, ClosedFormCheck, HelmholtzCheck, PfaffianCheck};
use crate::problem::{CartanInput, Problem};

pub const TOOL_NAME: &str = "vicar";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("problem has no multiplier or cartan candidate")]
    MissingCandidate,
    #[error("cartan candidate needs diagonalizable eigendata, but {0}")]
    NoEigendata(String),
    #[error("Pfaffian candidates apply only to the BNII1 branch; this system is {0}")]
    NotBnii1(String),
}

#[derive(Debug, Clone, Serialize)]
pub struct Tool {
    pub name: String,
    pub version: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Interval {
    pub symbol: String,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProblemSection {
    pub name: String,
    pub n: usize,
    pub coordinates: Vec<String>,
    pub velocities: Vec<String>,
    pub parameters: Vec<String>,
    pub rhs: Vec<String>,
    pub domain: Vec<Interval>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GeometrySection {
    /// `connection[a][b] = Γ^a_b`.
    pub connection: Vec<Vec<String>>,
    /// `jacobi[a][b] = Φ^a_b`.
    pub jacobi: Vec<Vec<String>>,
    /// Nonzero `R^d_ab` with `a < b`.
    pub curvature: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenSection {
    pub diagonalizable: bool,
    pub source: Option<EigenSource>,
    pub lambda: Vec<String>,
    /// `vectors[a][c] = X_a^c`.
    pub vectors: Option<Vec<Vec<String>>>,
    /// `eigenforms[a][c] = φ^a_c`.
    pub eigenforms: Option<Vec<Vec<String>>>,
    pub distinct: Option<bool>,
    /// Nonzero `τ` and `C` entries.
    pub structure_functions: BTreeMap<String, String>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CartanSection {
    pub g: Vec<Vec<String>>,
    pub helmholtz: HelmholtzCheck,
    pub closed_form: ClosedFormCheck,
    /// Whether the multiplier route and the closed-form route give the same verdict.
    pub routes_agree: bool,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct HelmholtzSection {
    pub multiplier: Option<HelmholtzCheck>,
    pub cartan: Option<CartanSection>,
    pub pfaffian: Option<PfaffianCheck>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CheckStatus {
    Pass,
    Fail,
    Inconclusive,
}

impl HelmholtzSection {
    pub fn is_empty(&self) -> bool {
        self.multiplier.is_none() && self.cartan.is_none() && self.pfaffian.is_none()
    }

    /// Fail if any check fails outright, else Inconclusive if any is undecided.
    pub fn status(&self) -> CheckStatus {
        let mut st = Vec::new();
        if let Some(h) = &self.multiplier {
            st.push(helmholtz_status(h));
        }
        if let Some(c) = &self.cartan {
            st.push(helmholtz_status(&c.helmholtz));
            st.push(if c.closed_form.passed {
                CheckStatus::Pass
            } else if c.closed_form.closed == ZeroVerdict::Inconclusive {
                CheckStatus::Inconclusive
            } else {
                CheckStatus::Fail
            });
        }
        if let Some(p) = &self.pfaffian {
            let verdicts: Vec<ZeroVerdict> = std::iter::once(p.sigma1).chain(p.sigma_alpha.iter().map(|s| s.verdict)).collect();
            st.push(if verdicts.contains(&ZeroVerdict::NonZero) {
                CheckStatus::Fail
            } else if verdicts.contains(&ZeroVerdict::Inconclusive) {
                CheckStatus::Inconclusive
            } else {
                CheckStatus::Pass
            });
        }
        if st.contains(&CheckStatus::Fail) {
            CheckStatus::Fail
        } else if st.contains(&CheckStatus::Inconclusive) {
            CheckStatus::Inconclusive
        } else {
            CheckStatus::Pass
        }
    }
}

fn helmholtz_status(h: &HelmholtzCheck) -> CheckStatus {
    let failed = h.conditions.iter().any(|c| c.verdict == ZeroVerdict::NonZero) || h.det.verdict == ZeroVerdict::Zero;
    if h.passed {
        CheckStatus::Pass
    } else if failed || !h.inconclusive {
        CheckStatus::Fail
    } else {
        CheckStatus::Inconclusive
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub tool: Tool,
    pub seed: u64,
    pub samples: usize,
    pub problem: ProblemSection,
    pub geometry: GeometrySection,
    pub eigen: Option<EigenSection>,
    pub classification: Classification,
    pub helmholtz: Option<HelmholtzSection>,
    pub caveats: Vec<String>,
}

fn strings(m: &[Vec<Expr>]) -> Vec<Vec<String>> {
    m.iter().map(|r| r.iter().map(Expr::to_string).collect()).collect()
}

fn problem_section(p: &Problem) -> ProblemSection {
    let s = &p.geometry.sode;
    ProblemSection {
        name: p.name.clone(),
        n: s.n,
        coordinates: s.coords.clone(),
        velocities: s.vels.clone(),
        parameters: s.params.clone(),
        rhs: s.f.iter().map(Expr::to_string).collect(),
        domain: s.zctx.domain.intervals.iter().map(|(n, lo, hi)| Interval { symbol: n.clone(), lo: *lo, hi: *hi }).collect(),
    }
}

fn geometry_section(p: &Problem) -> GeometrySection {
    let geo = &p.geometry;
    let n = geo.n();
    let mut curvature = BTreeMap::new();
    for d in 0..n {
        for a in 0..n {
            for b in a + 1..n {
                let r = geo.curvature(d, a, b);
                if !r.is_zero_node() {
                    curvature.insert(format!("R^{}_{}{}", d + 1, a + 1, b + 1), r.to_string());
                }
            }
        }
    }
    GeometrySection { connection: strings(&geo.gamma), jacobi: strings(&geo.phi), curvature }
}

fn eigen_section(resolution: &Resolution, sf: Option<&StructureFunctions>) -> EigenSection {
    let structure_functions = sf.map(|sf| sf.nonzero_entries().into_iter().collect()).unwrap_or_default();
    match resolution {
        Resolution::Diagonalizable(e) => EigenSection {
            diagonalizable: true,
            source: Some(e.source),
            lambda: e.lambda.iter().map(Expr::to_string).collect(),
            vectors: Some(strings(&e.x)),
            eigenforms: Some(strings(&e.phi)),
            distinct: Some(e.all_distinct()),
            structure_functions,
            note: None,
        },
        Resolution::NonDiagonalizable { lambda, note } => EigenSection {
            diagonalizable: false,
            source: None,
            lambda: lambda.iter().map(Expr::to_string).collect(),
            vectors: None,
            eigenforms: None,
            distinct: None,
            structure_functions,
            note: Some(note.clone()),
        },
    }
}

fn cartan_section(r: &[Vec<Expr>], p: &Problem, resolution: Option<&Resolution>) -> Result<CartanSection, RunError> {
    let eig = match resolution {
        Some(Resolution::Diagonalizable(e)) => e,
        Some(Resolution::NonDiagonalizable { .. }) => return Err(RunError::NoEigendata("the Jacobi endomorphism is not diagonalizable".into())),
        None => return Err(RunError::NoEigendata("no eigendata was resolved".into())),
    };
    let g = r_to_g(r, eig);
    let helmholtz = check_helmholtz(&g, &p.geometry);
    let closed_form = check_closed_form(r, &p.geometry, eig);
    let routes_agree = helmholtz.passed == closed_form.passed;
    Ok(CartanSection { g: strings(&g.rows()), helmholtz, closed_form, routes_agree })
}

fn pfaffian_check(c: &CartanInput, p: &Problem, sf: Option<&StructureFunctions>, data: Option<&Bnii1Data>, case: &str) -> Result<Option<PfaffianCheck>, RunError> {
    let Some(r1) = &c.r_tilde1 else {
        return Ok(None);
    };
    match (sf, data) {
        (Some(sf), Some(data)) => Ok(Some(verify_pfaffian_solution(r1, &c.r_alpha, sf, data, p.geometry.zctx()))),
        _ => Err(RunError::NotBnii1(case.into())),
    }
}

/// Full pipeline: geometry, eigendata, structure functions, classification, candidates.
pub fn analyze_problem(p: &Problem) -> Result<Report, RunError> {
    let analysis = analyze(&p.geometry, &p.eigen, p.normalize)?;
    let classification = analysis.classification;
    let mut caveats = classification.caveats.clone();
    let mut section = HelmholtzSection { multiplier: p.multiplier.as_ref().map(|g| check_helmholtz(g, &p.geometry)), ..Default::default() };
    if let Some(c) = &p.cartan {
        if let Some(r) = &c.r {
            match cartan_section(r, p, analysis.resolution.as_ref()) {
                Ok(s) => section.cartan = Some(s),
                Err(e) => caveats.push(format!("cartan candidate skipped: {e}")),
            }
        }
        match pfaffian_check(c, p, analysis.sf.as_ref(), classification.bnii1.as_ref(), &classification.case.to_string()) {
            Ok(pc) => section.pfaffian = pc,
            Err(e) => caveats.push(format!("Pfaffian candidate skipped: {e}")),
        }
    }
    Ok(Report {
        tool: Tool { name: TOOL_NAME.into(), version: TOOL_VERSION.into() },
        seed: p.seed,
        samples: p.samples,
        problem: problem_section(p),
        geometry: geometry_section(p),
        eigen: analysis.resolution.as_ref().map(|r| eigen_section(r, analysis.sf.as_ref())),
        classification,
        helmholtz: (!section.is_empty()).then_some(section),
        caveats,
    })
}

/// Verification of the candidates only.
pub fn check_problem(p: &Problem) -> Result<HelmholtzSection, RunError> {
    let cartan = p.cartan.as_ref().filter(|c| c.r.is_some() || c.r_tilde1.is_some());
    if p.multiplier.is_none() && cartan.is_none() {
        return Err(RunError::MissingCandidate);
    }
    let mut section = HelmholtzSection { multiplier: p.multiplier.as_ref().map(|g| check_helmholtz(g, &p.geometry)), ..Default::default() };
    let Some(c) = cartan else {
        return Ok(section);
    };
    if c.r_tilde1.is_some() {
        let analysis = analyze(&p.geometry, &p.eigen, p.normalize)?;
        if let Some(r) = &c.r {
            section.cartan = Some(cartan_section(r, p, analysis.resolution.as_ref())?);
        }
        let case = analysis.classification.case.to_string();
        section.pfaffian = pfaffian_check(c, p, analysis.sf.as_ref(), analysis.classification.bnii1.as_ref(), &case)?;
    } else if let Some(r) = &c.r {
        let resolution = match resolve_eigendata(&p.geometry, &p.eigen, p.normalize) {
            Ok(r) => r,
            Err(EigenError::AutoSolveUnavailable(why)) => return Err(RunError::NoEigendata(format!("the automatic solve is unavailable ({why})"))),
            Err(e) => return Err(AnalysisError::from(e).into()),
        };
        section.cartan = Some(cartan_section(r, p, Some(&resolution))?);
    }
    Ok(section)
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn is_inconclusive(&self) -> bool {
        self.classification.verdict == Verdict::Inconclusive
    }

    /// Human-readable summary.
    pub fn summary(&self) -> String {
        let c = &self.classification;
        let mut s = String::new();
        let _ = writeln!(s, "{} {}: {} (n = {}, seed {}, {} samples)", self.tool.name, self.tool.version, self.problem.name, self.problem.n, self.seed, self.samples);
        let _ = writeln!(s, "case: {}", c.case);
        let _ = writeln!(s, "verdict: {}", c.verdict);
        if let Some(q) = c.q {
            let labels: Vec<String> = c.non_integrable.iter().map(usize::to_string).collect();
            let _ = writeln!(s, "non-integrable co-distributions: q = {q} [{}]", labels.join(", "));
        }
        if let Some(r) = c.rank_a1 {
            let _ = writeln!(s, "rank A1: {r}");
        }
        if let Some(h2) = &c.h2 {
            let _ = writeln!(s, "h2 = {h2}");
        }
        if !c.conditions.is_empty() {
            let _ = writeln!(s, "conditions:");
            for cond in &c.conditions {
                let _ = write!(s, "  {:<8} {:<36} {:?}", cond.id, cond.paper_tag, cond.verdict);
                if let Some(w) = &cond.witness {
                    let _ = write!(s, "  [{} = {} ~ {:.6}]", w.name, w.expr, w.value);
                }
                if let Some(note) = &cond.note {
                    let _ = write!(s, "  ({note})");
                }
                s.push('\n');
            }
        }
        if !c.pfaffian.is_empty() {
            let _ = writeln!(s, "Pfaffian system:");
            for (k, v) in &c.pfaffian {
                let _ = writeln!(s, "  {k} = {v}");
            }
        }
        if let Some(m) = &c.module {
            let _ = writeln!(s, "differential ideal at step {}: {{{}}}", m.step, m.labels.join(", "));
        }
        if let Some(d) = &c.degeneracy {
            let _ = writeln!(s, "regular: {}  maximal rank: {}", d.regular, d.maximal_rank);
        }
        if let Some(g) = &c.generality {
            let _ = writeln!(s, "generality: s1 = {}, s2 = {}, t = {}: {}", g.s1, g.s2, g.t, g.text);
        }
        if let Some(h) = &self.helmholtz {
            s.push_str(&h.summary());
        }
        if !self.caveats.is_empty() {
            let _ = writeln!(s, "caveats:");
            for cv in &self.caveats {
                let _ = writeln!(s, "  - {cv}");
            }
        }
        s
    }
}

impl HelmholtzSection {
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let line = |s: &mut String, label: &str, h: &HelmholtzCheck| {
            let conds: Vec<String> = h.conditions.iter().map(|c| format!("{} {:?}", c.name, c.verdict)).collect();
            let det = h.det.symbolic.clone().unwrap_or_else(|| format!("min |det| {:.3e}", h.det.min_abs));
            let _ = writeln!(s, "{label}: {}; det {det} {:?} => {}", conds.join(", "), h.det.verdict, if h.passed { "pass" } else { "fail" });
            for c in &h.conditions {
                if let Some(w) = &c.witness {
                    let _ = writeln!(s, "  {} witness: {} = {} ~ {:.6}", c.name, w.name, w.expr, w.value);
                }
            }
        };
        if let Some(h) = &self.multiplier {
            line(&mut s, "multiplier", h);
        }
        if let Some(c) = &self.cartan {
            let _ = writeln!(s, "cartan g = {:?}", c.g);
            line(&mut s, "cartan multiplier", &c.helmholtz);
            let groups: Vec<String> = c.closed_form.groups.iter().map(|g| format!("({}) {:?}", g.group, g.verdict)).collect();
            let _ = writeln!(
                s,
                "closed form: {}; maximal rank {} => {}",
                groups.join(", "),
                c.closed_form.maximal_rank,
                if c.closed_form.passed { "pass" } else { "fail" }
            );
        }
        if let Some(p) = &self.pfaffian {
            let _ = writeln!(s, "Pfaffian candidate: sigma1 {:?}", p.sigma1);
            for a in &p.sigma_alpha {
                let _ = writeln!(s, "  sigma{} {:?}  P = {}  Q = {}", a.label, a.verdict, a.p, a.q);
            }
        }
        let _ = writeln!(s, "helmholtz status: {:?}", self.status());
        s
    }
}
