//! Differential forms expanded in an anholonomic frame.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::expr::Expr;

/// A k-form stored by strictly increasing index tuples; absent entries are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct Form {
    pub degree: usize,
    pub dim: usize,
    comps: BTreeMap<Vec<usize>, Expr>,
}

/// Sign of the permutation sorting `idx`, with the sorted tuple; `None` on a repeated index.
fn sort_sign(idx: &[usize]) -> Option<(i64, Vec<usize>)> {
    let mut v = idx.to_vec();
    let mut sign = 1;
    for i in 0..v.len() {
        for j in 0..v.len() - 1 - i {
            if v[j] > v[j + 1] {
                v.swap(j, j + 1);
                sign = -sign;
            } else if v[j] == v[j + 1] {
                return None;
            }
        }
    }
    if v.windows(2).any(|w| w[0] == w[1]) {
        return None;
    }
    Some((sign, v))
}

/// All strictly increasing `k`-tuples from `0..dim`.
pub fn combinations(dim: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, dim: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..dim {
            cur.push(i);
            rec(i + 1, dim, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, dim, k, &mut Vec::new(), &mut out);
    out
}

fn permutations(k: usize) -> Vec<(Vec<usize>, i64)> {
    if k == 0 {
        return vec![(vec![], 1)];
    }
    let mut out = Vec::new();
    for (p, s) in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            let flips = (p.len() - pos) as i64;
            out.push((q, if flips % 2 == 0 { s } else { -s }));
        }
    }
    out
}

impl Form {
    pub fn zero(degree: usize, dim: usize) -> Form {
        Form { degree, dim, comps: BTreeMap::new() }
    }

    /// The basis covector `e^i`.
    pub fn basis(i: usize, dim: usize) -> Form {
        let mut f = Form::zero(1, dim);
        f.set(&[i], Expr::one());
        f
    }

    pub fn from_components(comps: Vec<Expr>) -> Form {
        let mut f = Form::zero(1, comps.len());
        for (i, c) in comps.into_iter().enumerate() {
            f.set(&[i], c);
        }
        f
    }

    pub fn function(e: Expr, dim: usize) -> Form {
        let mut f = Form::zero(0, dim);
        f.set(&[], e);
        f
    }

    /// Value on the frame vectors with the given indices (any order).
    pub fn get(&self, idx: &[usize]) -> Expr {
        assert_eq!(idx.len(), self.degree, "form evaluated on wrong number of vectors");
        match sort_sign(idx) {
            None => Expr::zero(),
            Some((s, key)) => match self.comps.get(&key) {
                None => Expr::zero(),
                Some(v) => {
                    if s == 1 {
                        v.clone()
                    } else {
                        -v
                    }
                }
            },
        }
    }

    /// Sets the value on `idx`, storing it under the sorted tuple with the matching sign.
    pub fn set(&mut self, idx: &[usize], v: Expr) {
        let (s, key) = sort_sign(idx).expect("repeated index in form component");
        let v = if s == 1 { v } else { -v };
        if v.is_zero_node() {
            self.comps.remove(&key);
        } else {
            self.comps.insert(key, v);
        }
    }

    /// Stored nonzero components, keyed by increasing index tuples.
    pub fn components(&self) -> impl Iterator<Item = (&Vec<usize>, &Expr)> {
        self.comps.iter()
    }

    pub fn is_structurally_zero(&self) -> bool {
        self.comps.is_empty()
    }

    pub fn map(&self, f: impl Fn(&Expr) -> Expr) -> Form {
        let mut out = Form::zero(self.degree, self.dim);
        for (k, v) in &self.comps {
            out.set(k, f(v));
        }
        out
    }

    pub fn simplified(&self) -> Form {
        self.map(Expr::simplify)
    }

    pub fn scale(&self, c: &Expr) -> Form {
        self.map(|v| v * c)
    }

    pub fn add(&self, other: &Form) -> Form {
        assert_eq!((self.degree, self.dim), (other.degree, other.dim));
        let mut out = self.clone();
        for (k, v) in &other.comps {
            let cur = out.get(k);
            out.set(k, cur + v);
        }
        out
    }

    pub fn sub(&self, other: &Form) -> Form {
        self.add(&other.scale(&Expr::int(-1)))
    }

    /// Exterior product, determinant convention: `(a∧b)(E_i,E_j) = a_i b_j - a_j b_i`.
    pub fn wedge(&self, other: &Form) -> Form {
        assert_eq!(self.dim, other.dim);
        let mut acc: BTreeMap<Vec<usize>, Vec<Expr>> = BTreeMap::new();
        for (i, a) in &self.comps {
            for (j, b) in &other.comps {
                let mut idx = i.clone();
                idx.extend(j.iter().copied());
                if let Some((s, key)) = sort_sign(&idx) {
                    acc.entry(key).or_default().push(Expr::int(s) * a * b);
                }
            }
        }
        let mut out = Form::zero(self.degree + other.degree, self.dim);
        for (k, terms) in acc {
            out.set(&k, Expr::add(terms));
        }
        out
    }

    /// Re-expresses the form in a new frame. `t[i][j]` is the old covector `e^j`
    /// evaluated on the new vector `E'_i`.
    pub fn transform(&self, t: &[Vec<Expr>]) -> Form {
        let new_dim = t.len();
        let mut out = Form::zero(self.degree, new_dim);
        let perms = permutations(self.degree);
        for target in combinations(new_dim, self.degree) {
            let mut terms = Vec::new();
            for (j, w) in &self.comps {
                for (p, s) in &perms {
                    let mut f = vec![Expr::int(*s), w.clone()];
                    let mut zero = false;
                    for (a, &b) in p.iter().enumerate() {
                        let entry = &t[target[a]][j[b]];
                        if entry.is_zero_node() {
                            zero = true;
                            break;
                        }
                        f.push(entry.clone());
                    }
                    if !zero {
                        terms.push(Expr::mul(f));
                    }
                }
            }
            out.set(&target, Expr::add(terms));
        }
        out
    }

    /// Human-readable expansion such as `1/(2*t)*dt + x*phi1V^phi2H`, given coframe names.
    pub fn render(&self, names: &[String]) -> String {
        if self.comps.is_empty() {
            return "0".into();
        }
        self.comps
            .iter()
            .map(|(k, v)| {
                let basis = k.iter().map(|&i| names[i].as_str()).collect::<Vec<_>>().join("^");
                match (v.is_one_node(), basis.is_empty()) {
                    (_, true) => v.to_string(),
                    (true, false) => basis,
                    _ if matches!(v.node(), crate::expr::Node::Add(_)) => format!("({v})*{basis}"),
                    _ => format!("{v}*{basis}"),
                }
            })
            .collect::<Vec<_>>()
            .join(" + ")
    }

    /// Drops every component whose index tuple meets `excluded`.
    pub fn modulo(&self, excluded: &[usize]) -> Form {
        let mut out = Form::zero(self.degree, self.dim);
        for (k, v) in &self.comps {
            if !k.iter().any(|i| excluded.contains(i)) {
                out.set(k, v.clone());
            }
        }
        out
    }
}

/// A frame of vector fields with its dual coframe, both in coordinate components.
#[derive(Clone, Debug)]
pub struct Frame {
    pub names: Vec<String>,
    pub coords: Vec<String>,
    pub vectors: Vec<Vec<Expr>>,
    pub covectors: Vec<Vec<Expr>>,
    /// `structure[k]` is the 2-form `(i, j) -> e^k([E_i, E_j])`.
    structure: Vec<Form>,
}

/// Structure-constant entry for display.
#[derive(Clone, Debug, Serialize)]
pub struct Bracket {
    pub i: String,
    pub j: String,
    pub k: String,
    pub value: String,
}

impl Frame {
    /// Builds the frame and computes its structure functions from coordinate brackets.
    pub fn from_brackets(names: Vec<String>, coords: Vec<String>, vectors: Vec<Vec<Expr>>, covectors: Vec<Vec<Expr>>) -> Frame {
        let dim = vectors.len();
        let mut frame = Frame { names, coords, vectors, covectors, structure: Vec::new() };
        let mut structure = vec![Form::zero(2, dim); dim];
        for pair in combinations(dim, 2) {
            let br = frame.coordinate_bracket(&frame.vectors[pair[0]], &frame.vectors[pair[1]]);
            for (k, s) in structure.iter_mut().enumerate() {
                let c = pair_with(&frame.covectors[k], &br).simplify();
                s.set(&pair, c);
            }
        }
        frame.structure = structure;
        frame
    }

    /// Builds a frame whose structure functions are already known.
    pub fn with_structure(
        names: Vec<String>,
        coords: Vec<String>,
        vectors: Vec<Vec<Expr>>,
        covectors: Vec<Vec<Expr>>,
        structure: Vec<Form>,
    ) -> Frame {
        Frame { names, coords, vectors, covectors, structure }
    }

    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    /// Directional derivative of `f` along a vector given in coordinate components.
    pub fn apply_vector(&self, v: &[Expr], f: &Expr) -> Expr {
        let mut terms = Vec::new();
        for (c, name) in v.iter().zip(&self.coords) {
            if c.is_zero_node() || !f.depends_on(name) {
                continue;
            }
            terms.push(c * f.diff(name));
        }
        Expr::add(terms)
    }

    /// `E_i(f)`.
    pub fn apply(&self, i: usize, f: &Expr) -> Expr {
        self.apply_vector(&self.vectors[i], f)
    }

    /// Coordinate components of `[X, Y]`.
    pub fn coordinate_bracket(&self, x: &[Expr], y: &[Expr]) -> Vec<Expr> {
        (0..self.coords.len()).map(|m| self.apply_vector(x, &y[m]) - self.apply_vector(y, &x[m])).collect()
    }

    /// Frame components of a vector given in coordinates.
    pub fn frame_components(&self, v: &[Expr]) -> Vec<Expr> {
        self.covectors.iter().map(|c| pair_with(c, v).simplify()).collect()
    }

    /// `e^k([E_i, E_j])`.
    pub fn structure(&self, k: usize, i: usize, j: usize) -> Expr {
        self.structure[k].get(&[i, j])
    }

    /// Exterior derivative, using
    /// `dω(E_0..E_k) = Σ (-1)^p E_p ω(..^p..) + Σ_{p<q} (-1)^{p+q} ω([E_p,E_q], ..^p..^q..)`.
    pub fn d(&self, w: &Form) -> Form {
        let dim = self.dim();
        let k = w.degree;
        let mut out = Form::zero(k + 1, dim);
        for idx in combinations(dim, k + 1) {
            let mut terms = Vec::new();
            for p in 0..=k {
                let rest: Vec<usize> = idx.iter().enumerate().filter(|(a, _)| *a != p).map(|(_, &b)| b).collect();
                let val = w.get(&rest);
                if val.is_zero_node() {
                    continue;
                }
                let term = self.apply(idx[p], &val);
                terms.push(if p % 2 == 0 { term } else { -term });
            }
            for p in 0..=k {
                for q in p + 1..=k {
                    let rest: Vec<usize> =
                        idx.iter().enumerate().filter(|(a, _)| *a != p && *a != q).map(|(_, &b)| b).collect();
                    for m in 0..dim {
                        let c = self.structure(m, idx[p], idx[q]);
                        if c.is_zero_node() {
                            continue;
                        }
                        let mut args = vec![m];
                        args.extend(rest.iter().copied());
                        let val = w.get(&args);
                        if val.is_zero_node() {
                            continue;
                        }
                        let term = c * val;
                        terms.push(if (p + q) % 2 == 0 { term } else { -term });
                    }
                }
            }
            out.set(&idx, Expr::add(terms).simplify());
        }
        out
    }

    /// The differential of a function as a 1-form.
    pub fn d_function(&self, f: &Expr) -> Form {
        self.d(&Form::function(f.clone(), self.dim()))
    }

    /// Table of nonzero structure functions.
    pub fn brackets(&self) -> Vec<Bracket> {
        let mut out = Vec::new();
        for pair in combinations(self.dim(), 2) {
            for k in 0..self.dim() {
                let c = self.structure(k, pair[0], pair[1]);
                if !c.is_zero_node() {
                    out.push(Bracket {
                        i: self.names[pair[0]].clone(),
                        j: self.names[pair[1]].clone(),
                        k: self.names[k].clone(),
                        value: c.to_string(),
                    });
                }
            }
        }
        out
    }
}

/// `Σ a_m b_m`.
pub fn pair_with(a: &[Expr], b: &[Expr]) -> Expr {
    Expr::add(
        a.iter()
            .zip(b)
            .filter(|(x, y)| !x.is_zero_node() && !y.is_zero_node())
            .map(|(x, y)| x * y)
            .collect(),
    )
}
