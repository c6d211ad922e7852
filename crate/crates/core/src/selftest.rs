//! Bundled golden corpus and property checks.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Deserialize;
use serde_json::Value;
use thiserror::Error;

use crate::classify::{analyze, cartan_generality};
use crate::eigen::{Resolution, StructureFunctions};
use crate::expr::{parse, Expr, ZeroVerdict};
use crate::forms::{Form, Frame};
use crate::geometry::Geometry;
use crate::helmholtz::{check_closed_form, check_helmholtz, diagonal, r_to_g};
use crate::problem::{Overrides, Problem};
use crate::report::{analyze_problem, check_problem};

/// Problem files shipped with the tool, by short name.
pub const PROBLEMS: [(&str, &str); 7] = [
    ("ex1", include_str!("../problems/ex1.vicar")),
    ("ex2", include_str!("../problems/ex2.vicar")),
    ("ex3", include_str!("../problems/ex3.vicar")),
    ("free_particle", include_str!("../problems/free_particle.vicar")),
    ("case_c", include_str!("../problems/case_c.vicar")),
    ("ex2_multiplier", include_str!("../problems/ex2_multiplier.vicar")),
    ("ex2_identity", include_str!("../problems/ex2_identity.vicar")),
];

pub const GOLDEN: &str = include_str!("../golden/corpus.toml");

/// Absolute tolerance for the numeric `d∘d = 0` check.
pub const DD_TOL: f64 = 1e-7;

#[derive(Debug, Error)]
pub enum SelftestError {
    #[error("corpus: {0}")]
    Corpus(#[from] toml::de::Error),
    #[error("row `{row}`: unknown problem `{problem}`")]
    UnknownProblem { row: String, problem: String },
}

#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq, Eq, PartialOrd, Ord)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    #[default]
    Analyze,
    Check,
}

#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Compare {
    /// JSON equality.
    #[default]
    Exact,
    /// Both sides parse as expressions and their difference tests Zero; a missing entry reads as `0`.
    Expr,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Row {
    pub name: String,
    pub problem: String,
    #[serde(default)]
    pub command: Command,
    /// JSON pointer into the report.
    pub pointer: String,
    pub expect: toml::Value,
    #[serde(default)]
    pub compare: Compare,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Corpus {
    row: Vec<Row>,
}

#[derive(Debug, Clone)]
pub struct RowResult {
    pub name: String,
    pub passed: bool,
    pub detail: Option<String>,
}

#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub rows: Vec<RowResult>,
}

impl Outcome {
    pub fn all_passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &RowResult> {
        self.rows.iter().filter(|r| !r.passed)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for r in &self.rows {
            let _ = write!(s, "{}  {}", if r.passed { "PASS" } else { "FAIL" }, r.name);
            if let Some(d) = &r.detail {
                let _ = write!(s, ": {d}");
            }
            s.push('\n');
        }
        let failed = self.failures().count();
        let _ = writeln!(s, "{} passed, {failed} failed", self.rows.len() - failed);
        s
    }
}

pub fn problem_source(name: &str) -> Option<&'static str> {
    PROBLEMS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn load_bundled(name: &str) -> Option<Problem> {
    problem_source(name).map(|src| Problem::parse(src, name, Overrides::default()).expect("bundled problem parses"))
}

/// Runs the corpus (bundled when `corpus` is `None`) and the property rows.
pub fn run(corpus: Option<&str>, filter: Option<&str>) -> Result<Outcome, SelftestError> {
    let corpus: Corpus = toml::from_str(corpus.unwrap_or(GOLDEN))?;
    let keep = |name: &str| filter.is_none_or(|f| name.contains(f));
    for r in &corpus.row {
        if problem_source(&r.problem).is_none() {
            return Err(SelftestError::UnknownProblem { row: r.name.clone(), problem: r.problem.clone() });
        }
    }
    let mut cache: BTreeMap<(String, Command), Result<Value, String>> = BTreeMap::new();
    let mut out = Outcome::default();
    for row in corpus.row.iter().filter(|r| keep(&r.name)) {
        let problem = load_bundled(&row.problem).expect("checked above");
        let report = cache
            .entry((row.problem.clone(), row.command))
            .or_insert_with(|| match row.command {
                Command::Analyze => analyze_problem(&problem).map(|r| serde_json::to_value(r).expect("serializes")),
                Command::Check => check_problem(&problem).map(|r| serde_json::to_value(r).expect("serializes")),
            }
            .map_err(|e| e.to_string()));
        out.rows.push(match report {
            Ok(v) => check_row(row, v, &problem),
            Err(e) => RowResult { name: row.name.clone(), passed: false, detail: Some(format!("pipeline error: {e}")) },
        });
    }
    for (name, prop) in properties() {
        if keep(&name) {
            let res = prop();
            out.rows.push(RowResult { name, passed: res.is_ok(), detail: res.err() });
        }
    }
    Ok(out)
}

fn check_row(row: &Row, report: &Value, problem: &Problem) -> RowResult {
    let expect = serde_json::to_value(&row.expect).expect("toml value converts");
    let actual = report.pointer(&row.pointer);
    let detail = match row.compare {
        Compare::Exact => match actual {
            Some(a) if *a == expect => None,
            Some(a) => Some(format!("expected {expect}, got {a}")),
            None => Some(format!("expected {expect}, but {} is absent", row.pointer)),
        },
        Compare::Expr => {
            let actual = match actual {
                None => Some("0"),
                Some(Value::String(s)) => Some(s.as_str()),
                Some(_) => None,
            };
            match (actual, expect.as_str()) {
                (Some(a), Some(e)) => expr_mismatch(problem, a, e),
                _ => Some(format!("expression comparison needs strings; expected {expect}, got {:?}", report.pointer(&row.pointer))),
            }
        }
    };
    RowResult { name: row.name.clone(), passed: detail.is_none(), detail }
}

fn expr_mismatch(problem: &Problem, actual: &str, expected: &str) -> Option<String> {
    let syms = problem.geometry.sode.symbols();
    let (a, e) = match (parse(actual, &syms), parse(expected, &syms)) {
        (Ok(a), Ok(e)) => (a, e),
        (Err(err), _) => return Some(format!("cannot parse actual `{actual}`: {err}")),
        (_, Err(err)) => return Some(format!("cannot parse expectation `{expected}`: {err}")),
    };
    match problem.geometry.zctx().is_zero(&(&a - &e)).verdict {
        ZeroVerdict::Zero => None,
        v => Some(format!("expected {expected}, got {actual} (difference {v:?})")),
    }
}

type Property = Box<dyn Fn() -> Result<(), String>>;

fn properties() -> Vec<(String, Property)> {
    let mut v: Vec<(String, Property)> = Vec::new();
    for (ex, label) in [("ex1", "example1"), ("ex2", "example2"), ("ex3", "example3")] {
        v.push((format!("property/{label}/dd-zero"), Box::new(move || dd_zero_property(ex))));
        v.push((format!("property/{label}/tau-cross-consistency"), Box::new(move || tau_cross_property(ex))));
    }
    v.push(("property/example2/route-equivalence".into(), Box::new(route_property)));
    v.push(("property/cartan-characters".into(), Box::new(generality_property)));
    v
}

fn structure_functions(ex: &str) -> Result<(Problem, StructureFunctions), String> {
    let p = load_bundled(ex).ok_or("unknown problem")?;
    let a = analyze(&p.geometry, &p.eigen, p.normalize).map_err(|e| e.to_string())?;
    let sf = a.sf.ok_or("no structure functions")?;
    Ok((p, sf))
}

/// Largest `|d(dθ)|` over the sample points, for every basis 1-form of `frame`.
pub fn dd_residual(frame: &Frame, geo: &Geometry) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..frame.dim() {
        let dd = frame.d(&frame.d(&Form::basis(i, frame.dim())));
        for (_, e) in dd.components() {
            for p in geo.zctx().points() {
                if let Ok(x) = e.eval(p) {
                    worst = worst.max(x.abs());
                }
            }
        }
    }
    worst
}

fn dd_zero_property(ex: &str) -> Result<(), String> {
    let (p, sf) = structure_functions(ex)?;
    for (which, frame) in [("standard", &p.geometry.frame), ("eigen", &sf.frame)] {
        let worst = dd_residual(frame, &p.geometry);
        if worst > DD_TOL {
            return Err(format!("{which} coframe: max |dd| = {worst:e}"));
        }
    }
    Ok(())
}

fn tau_cross_property(ex: &str) -> Result<(), String> {
    let (p, sf) = structure_functions(ex)?;
    let z = p.geometry.zctx();
    for a in 0..sf.n {
        for (name, direct, rebuilt) in [("V", &sf.dphi_v[a], sf.expected_dphi_v(a)), ("H", &sf.dphi_h[a], sf.expected_dphi_h(a))] {
            for (idx, e) in direct.sub(&rebuilt).components() {
                if z.is_zero(&e.simplify()).verdict != ZeroVerdict::Zero {
                    return Err(format!("dphi^{}{name} differs on {}", a + 1, sf.slot_label(idx)));
                }
            }
        }
    }
    Ok(())
}

fn route_property() -> Result<(), String> {
    let p = load_bundled("ex2").ok_or("unknown problem")?;
    let eig = match crate::eigen::resolve_eigendata(&p.geometry, &p.eigen, p.normalize).map_err(|e| e.to_string())? {
        Resolution::Diagonalizable(e) => e,
        _ => return Err("example 2 should be diagonalizable".into()),
    };
    let syms = p.geometry.sode.symbols();
    for r in [["sqrt(t)", "-sqrt(t)", "1"], ["sqrt(t)", "-sqrt(t)", "y - v*t"], ["t", "-sqrt(t)", "1"], ["1", "1", "1"]] {
        let r: Vec<Expr> = r.iter().map(|s| parse(s, &syms).expect("parses")).collect();
        let r = diagonal(&r);
        let h = check_helmholtz(&r_to_g(&r, &eig), &p.geometry);
        let c = check_closed_form(&r, &p.geometry, &eig);
        if h.passed != c.passed {
            return Err(format!("routes disagree on r = {:?}: multiplier {} vs closed form {}", r, h.passed, c.passed));
        }
        if c.derivability == Some(false) {
            return Err(format!("displayed groups vanish but derived groups do not for r = {r:?}"));
        }
    }
    Ok(())
}

fn generality_property() -> Result<(), String> {
    for n in 3..=12 {
        let g = cartan_generality(n);
        if g.t != g.s1 + 2 * g.s2 || g.s1 != n - 2 {
            return Err(format!("n = {n}: {g:?}"));
        }
    }
    Ok(())
}
