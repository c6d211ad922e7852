//! Problem files: TOML with expression strings.

use std::collections::BTreeMap;
use std::ops::Range;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;
use toml::Spanned;

use crate::eigen::{EigenInput, Normalize};
use crate::expr::{parse, DomainBox, Expr, ParseError, Symbols, ZeroContext, DEFAULT_SAMPLES};
use crate::geometry::{Geometry, GeometryError, Sode};
use crate::helmholtz::{HelmholtzError, Multiplier};

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: {msg}")]
    Toml { line: usize, msg: String },
    #[error("line {line}, column {column}: {field}: {source}")]
    Expr { line: usize, column: usize, field: String, source: ParseError },
    #[error("{field}: expected {expected} entries, found {found}")]
    Shape { field: String, expected: usize, found: usize },
    #[error("invalid name `{name}`: {why}")]
    Name { name: String, why: String },
    #[error("box: {0}")]
    Box(String),
    #[error("line {line}: guard `{guard}` is not positive at {point}")]
    Guard { line: usize, guard: String, point: String },
    #[error("line {line}: eigen: {msg}")]
    Eigen { line: usize, msg: String },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("{field}: {source}")]
    Matrix { field: String, source: HelmholtzError },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    name: Option<String>,
    n: usize,
    coordinates: Vec<String>,
    velocities: Vec<String>,
    #[serde(default)]
    parameters: Vec<String>,
    #[serde(rename = "F")]
    f: Vec<Spanned<String>>,
    seed: Option<u64>,
    samples: Option<usize>,
    #[serde(default)]
    guards: Vec<Spanned<String>>,
    #[serde(rename = "box")]
    domain: Spanned<BTreeMap<String, [f64; 2]>>,
    eigen: Option<Spanned<RawEigen>>,
    multiplier: Option<RawMultiplier>,
    cartan: Option<RawCartan>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEigen {
    #[serde(default)]
    lambda: Vec<Spanned<String>>,
    #[serde(default)]
    vectors: Vec<Vec<Spanned<String>>>,
    normalize: Option<String>,
    #[serde(default)]
    non_diagonalizable: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMultiplier {
    g: Vec<Vec<Spanned<String>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCartan {
    r: Option<Vec<Spanned<String>>>,
    r_matrix: Option<Vec<Vec<Spanned<String>>>>,
    r_tilde1: Option<Spanned<String>>,
    #[serde(default)]
    r_alpha: BTreeMap<String, Spanned<String>>,
}

/// Candidate Cartan 2-form data in the eigen-coframe.
#[derive(Debug, Clone, Default)]
pub struct CartanInput {
    /// Full `r_{ab}`; a diagonal list is expanded.
    pub r: Option<Vec<Vec<Expr>>>,
    pub r_tilde1: Option<Expr>,
    /// 0-based label to `r_α`.
    pub r_alpha: BTreeMap<usize, Expr>,
}

/// Settings that override the file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct Problem {
    pub name: String,
    pub geometry: Geometry,
    pub f_source: Vec<String>,
    pub eigen: EigenInput,
    pub normalize: Normalize,
    pub multiplier: Option<Multiplier>,
    pub cartan: Option<CartanInput>,
    pub seed: u64,
    pub samples: usize,
}

const RESERVED: [&str; 6] = ["t", "sqrt", "exp", "ln", "sin", "cos"];

fn line_of(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

fn column_of(src: &str, offset: usize) -> usize {
    let offset = offset.min(src.len());
    offset - src[..offset].rfind('\n').map(|i| i + 1).unwrap_or(0) + 1
}

struct Ctx<'a> {
    src: &'a str,
    syms: Symbols,
}

impl Ctx<'_> {
    fn line(&self, span: Range<usize>) -> usize {
        line_of(self.src, span.start)
    }

    fn expr(&self, field: &str, s: &Spanned<String>) -> Result<Expr, ProblemError> {
        parse(s.get_ref(), &self.syms).map_err(|e| {
            // The span covers the quoted string; skip the opening quote.
            let at = s.span().start + 1 + e.offset();
            ProblemError::Expr { line: line_of(self.src, at), column: column_of(self.src, at), field: field.into(), source: e }
        })
    }

    fn exprs(&self, field: &str, v: &[Spanned<String>]) -> Result<Vec<Expr>, ProblemError> {
        v.iter().enumerate().map(|(i, s)| self.expr(&format!("{field}[{}]", i + 1), s)).collect()
    }

    fn matrix(&self, field: &str, rows: &[Vec<Spanned<String>>], n: usize) -> Result<Vec<Vec<Expr>>, ProblemError> {
        shape(field, n, rows.len())?;
        rows.iter()
            .enumerate()
            .map(|(i, r)| {
                let f = format!("{field}[{}]", i + 1);
                shape(&f, n, r.len())?;
                self.exprs(&f, r)
            })
            .collect()
    }
}

fn shape(field: &str, expected: usize, found: usize) -> Result<(), ProblemError> {
    if expected == found {
        Ok(())
    } else {
        Err(ProblemError::Shape { field: field.into(), expected, found })
    }
}

fn symmetric(field: &str, rows: &[Vec<Expr>]) -> Result<Multiplier, ProblemError> {
    Multiplier::from_rows(rows).map_err(|source| ProblemError::Matrix { field: field.into(), source })
}

fn check_name(name: &str) -> Result<(), ProblemError> {
    let ok = name.chars().next().is_some_and(|c| c.is_ascii_alphabetic())
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    if !ok {
        return Err(ProblemError::Name { name: name.into(), why: "not an identifier".into() });
    }
    if RESERVED.contains(&name) {
        return Err(ProblemError::Name { name: name.into(), why: "reserved".into() });
    }
    Ok(())
}

impl Problem {
    pub fn load(path: &Path, overrides: Overrides) -> Result<Problem, ProblemError> {
        let src = std::fs::read_to_string(path).map_err(|e| ProblemError::Io { path: path.display().to_string(), source: e })?;
        let fallback = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        Problem::parse(&src, &fallback, overrides)
    }

    /// Parses problem text; `fallback_name` is used when the file has no `name`.
    pub fn parse(src: &str, fallback_name: &str, overrides: Overrides) -> Result<Problem, ProblemError> {
        let raw: RawProblem = toml::from_str(src).map_err(|e| ProblemError::Toml {
            line: e.span().map(|s| line_of(src, s.start)).unwrap_or(0),
            msg: e.message().to_string(),
        })?;
        let n = raw.n;
        shape("coordinates", n, raw.coordinates.len())?;
        shape("velocities", n, raw.velocities.len())?;
        shape("F", n, raw.f.len())?;
        let mut seen = std::collections::BTreeSet::new();
        for name in raw.coordinates.iter().chain(&raw.velocities).chain(&raw.parameters) {
            check_name(name)?;
            if !seen.insert(name.clone()) {
                return Err(ProblemError::Name { name: name.clone(), why: "declared twice".into() });
            }
        }

        let mut syms = Symbols::new(std::iter::once("t".to_string()).chain(seen.iter().cloned()));
        for p in &raw.parameters {
            syms.insert(p);
        }
        let ctx = Ctx { src, syms };

        let domain_line = ctx.line(raw.domain.span());
        let domain = raw.domain.get_ref();
        let mut intervals = Vec::new();
        for name in std::iter::once(&"t".to_string()).chain(&raw.coordinates).chain(&raw.velocities).chain(&raw.parameters) {
            let Some([lo, hi]) = domain.get(name) else {
                return Err(ProblemError::Box(format!("line {domain_line}: no interval for `{name}`")));
            };
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(ProblemError::Box(format!("line {domain_line}: bad interval for `{name}`: [{lo}, {hi}]")));
            }
            intervals.push((name.clone(), *lo, *hi));
        }
        if let Some(extra) = domain.keys().find(|k| !ctx.syms.contains(k)) {
            return Err(ProblemError::Box(format!("line {domain_line}: `{extra}` is not a declared symbol")));
        }

        let seed = overrides
            .seed
            .or_else(|| std::env::var("VICAR_SEED").ok().and_then(|s| s.trim().parse().ok()))
            .or(raw.seed)
            .unwrap_or(0);
        let samples = overrides.samples.or(raw.samples).unwrap_or(DEFAULT_SAMPLES).max(1);
        let zctx = ZeroContext::new(DomainBox::new(intervals), samples, seed);

        for (i, g) in raw.guards.iter().enumerate() {
            let e = ctx.expr(&format!("guards[{}]", i + 1), g)?;
            for p in zctx.points().iter().chain(std::iter::once(&zctx.domain.midpoint())) {
                if !e.eval(p).is_ok_and(|v| v > 0.0) {
                    let point = p.iter().map(|(k, v)| format!("{k}={v:.4}")).collect::<Vec<_>>().join(", ");
                    return Err(ProblemError::Guard { line: ctx.line(g.span()), guard: g.get_ref().clone(), point });
                }
            }
        }

        let f = ctx.exprs("F", &raw.f)?;
        let sode = Sode::new(raw.coordinates.clone(), raw.velocities.clone(), raw.parameters.clone(), f, zctx)?;
        let geometry = Geometry::new(sode);

        let (eigen, normalize) = match &raw.eigen {
            None => (EigenInput::Auto, Normalize::None),
            Some(e) => {
                let line = ctx.line(e.span());
                let e = e.get_ref();
                let normalize = match e.normalize.as_deref() {
                    None | Some("none") => Normalize::None,
                    Some("unit-first-component") => Normalize::UnitFirstComponent,
                    Some(other) => return Err(ProblemError::Eigen { line, msg: format!("unknown normalize `{other}`") }),
                };
                let lambda = ctx.exprs("eigen.lambda", &e.lambda)?;
                let input = if e.non_diagonalizable {
                    EigenInput::NonDiagonalizable { lambda }
                } else if e.vectors.is_empty() && lambda.is_empty() {
                    EigenInput::Auto
                } else {
                    shape("eigen.lambda", n, lambda.len())?;
                    EigenInput::Supplied { lambda, vectors: ctx.matrix("eigen.vectors", &e.vectors, n)? }
                };
                (input, normalize)
            }
        };

        let multiplier = match &raw.multiplier {
            None => None,
            Some(m) => Some(symmetric("multiplier.g", &ctx.matrix("multiplier.g", &m.g, n)?)?),
        };

        let cartan = match &raw.cartan {
            None => None,
            Some(c) => {
                let r = match (&c.r, &c.r_matrix) {
                    (Some(_), Some(_)) => {
                        return Err(ProblemError::Toml { line: 0, msg: "cartan: give either `r` or `r_matrix`, not both".into() })
                    }
                    (Some(d), None) => {
                        shape("cartan.r", n, d.len())?;
                        Some(crate::helmholtz::diagonal(&ctx.exprs("cartan.r", d)?))
                    }
                    (None, Some(m)) => Some(symmetric("cartan.r_matrix", &ctx.matrix("cartan.r_matrix", m, n)?)?.rows()),
                    (None, None) => None,
                };
                let r_tilde1 = c.r_tilde1.as_ref().map(|s| ctx.expr("cartan.r_tilde1", s)).transpose()?;
                let mut r_alpha = BTreeMap::new();
                for (k, v) in &c.r_alpha {
                    let label: usize = k
                        .parse()
                        .ok()
                        .filter(|l| (1..=n).contains(l))
                        .ok_or_else(|| ProblemError::Shape { field: format!("cartan.r_alpha label `{k}`"), expected: n, found: 0 })?;
                    r_alpha.insert(label - 1, ctx.expr(&format!("cartan.r_alpha.{k}"), v)?);
                }
                Some(CartanInput { r, r_tilde1, r_alpha })
            }
        };

        Ok(Problem {
            name: raw.name.unwrap_or_else(|| fallback_name.to_string()),
            geometry,
            f_source: raw.f.iter().map(|s| s.get_ref().clone()).collect(),
            eigen,
            normalize,
            multiplier,
            cartan,
            seed,
            samples,
        })
    }
}
