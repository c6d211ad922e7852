//! Small symbolic matrices over the rational normal form.

use crate::expr::rnf::{Frac, Rnf};
use crate::expr::{Expr, ZeroContext, ZeroVerdict};

pub type Matrix = Vec<Vec<Expr>>;

struct FracMatrix {
    ctx: Rnf,
    rows: Vec<Vec<Frac>>,
}

impl FracMatrix {
    fn new(m: &[Vec<Expr>]) -> FracMatrix {
        let mut ctx = Rnf::new();
        m.iter().flatten().for_each(|e| ctx.prescan(e));
        let rows = m.iter().map(|r| r.iter().map(|e| ctx.convert(e)).collect()).collect();
        FracMatrix { ctx, rows }
    }

    fn verdict(&self, f: &Frac, z: &ZeroContext) -> ZeroVerdict {
        if f.is_zero() {
            return ZeroVerdict::Zero;
        }
        z.is_zero(&self.ctx.to_expr(f)).verdict
    }

    /// Row-reduces in place; returns pivot columns. Only entries proved nonzero become pivots.
    fn rref(&mut self, z: &ZeroContext, ncols: usize) -> Vec<usize> {
        let nrows = self.rows.len();
        let mut pivots = Vec::new();
        let mut r = 0;
        for col in 0..ncols {
            if r == nrows {
                break;
            }
            let Some(pr) = (r..nrows).find(|&i| self.verdict(&self.rows[i][col], z) == ZeroVerdict::NonZero) else {
                continue;
            };
            self.rows.swap(r, pr);
            let inv = self.ctx.inv(&self.rows[r][col]).expect("pivot is nonzero");
            let row: Vec<Frac> = self.rows[r].iter().map(|f| self.ctx.mul(f, &inv)).collect();
            self.rows[r] = row;
            for i in 0..nrows {
                if i == r || self.rows[i][col].is_zero() {
                    continue;
                }
                let factor = self.rows[i][col].clone();
                let new: Vec<Frac> = (0..self.rows[i].len())
                    .map(|j| {
                        let prod = self.ctx.mul(&factor, &self.rows[r][j]);
                        self.ctx.sub(&self.rows[i][j], &prod)
                    })
                    .collect();
                self.rows[i] = new;
            }
            pivots.push(col);
            r += 1;
        }
        pivots
    }
}

/// Symbolic inverse, or `None` when some pivot cannot be shown nonzero.
pub fn inverse(m: &[Vec<Expr>], z: &ZeroContext) -> Option<Matrix> {
    let n = m.len();
    let mut aug: Vec<Vec<Expr>> = m.to_vec();
    for (i, row) in aug.iter_mut().enumerate() {
        row.extend((0..n).map(|j| if i == j { Expr::one() } else { Expr::zero() }));
    }
    let mut fm = FracMatrix::new(&aug);
    let pivots = fm.rref(z, n);
    if pivots.len() < n {
        return None;
    }
    Some(fm.rows.iter().map(|r| r[n..].iter().map(|f| fm.ctx.to_expr(f)).collect()).collect())
}

/// Basis of the null space. Entries not proved nonzero are treated as zero.
pub fn nullspace(m: &[Vec<Expr>], z: &ZeroContext) -> Vec<Vec<Expr>> {
    let ncols = m.first().map(Vec::len).unwrap_or(0);
    let mut fm = FracMatrix::new(m);
    let pivots = fm.rref(z, ncols);
    let free: Vec<usize> = (0..ncols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&fc| {
            let mut v = vec![Expr::zero(); ncols];
            v[fc] = Expr::one();
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = (-fm.ctx.to_expr(&fm.rows[r][fc])).simplify();
            }
            v
        })
        .collect()
}

/// Determinant by cofactor expansion, simplified.
pub fn det(m: &[Vec<Expr>]) -> Expr {
    fn rec(m: &[Vec<Expr>]) -> Expr {
        match m.len() {
            0 => Expr::one(),
            1 => m[0][0].clone(),
            2 => &m[0][0] * &m[1][1] - &m[0][1] * &m[1][0],
            n => {
                let mut terms = Vec::new();
                for j in 0..n {
                    if m[0][j].is_zero_node() {
                        continue;
                    }
                    let minor: Vec<Vec<Expr>> =
                        m[1..].iter().map(|r| r.iter().enumerate().filter(|(k, _)| *k != j).map(|(_, e)| e.clone()).collect()).collect();
                    let t = &m[0][j] * rec(&minor);
                    terms.push(if j % 2 == 0 { t } else { -t });
                }
                Expr::add(terms)
            }
        }
    }
    rec(m).simplify()
}

/// Determinant of a numeric matrix by partial-pivot elimination.
pub fn det_f64(mut m: Vec<Vec<f64>>) -> f64 {
    let n = m.len();
    let mut d = 1.0;
    for c in 0..n {
        let p = (c..n).max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs())).unwrap();
        if m[p][c] == 0.0 {
            return 0.0;
        }
        if p != c {
            m.swap(p, c);
            d = -d;
        }
        d *= m[c][c];
        for r in c + 1..n {
            let f = m[r][c] / m[c][c];
            for k in c..n {
                m[r][k] -= f * m[c][k];
            }
        }
    }
    d
}

pub fn mat_vec(m: &[Vec<Expr>], v: &[Expr]) -> Vec<Expr> {
    m.iter().map(|r| Expr::add(r.iter().zip(v).map(|(a, b)| a * b).collect())).collect()
}

pub fn transpose(m: &[Vec<Expr>]) -> Matrix {
    if m.is_empty() {
        return vec![];
    }
    (0..m[0].len()).map(|j| m.iter().map(|r| r[j].clone()).collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, DomainBox, Symbols};

    fn z() -> ZeroContext {
        ZeroContext::new(DomainBox::new(vec![("t".into(), 1.0, 4.0), ("w".into(), 1.0, 2.0), ("u".into(), -2.0, -1.0)]), 16, 0)
    }

    fn p(s: &str) -> Expr {
        parse(s, &Symbols::new(["t", "u", "w"])).unwrap()
    }

    fn m(rows: &[&[&str]]) -> Matrix {
        rows.iter().map(|r| r.iter().map(|s| p(s)).collect()).collect()
    }

    #[test]
    fn inverse_with_square_roots() {
        let a = m(&[&["-sqrt(t)", "sqrt(t)", "0"], &["0", "0", "1"], &["1", "1", "0"]]);
        let inv = inverse(&a, &z()).unwrap();
        assert_eq!(inv[0], vec![p("-1/(2*sqrt(t))"), p("0"), p("1/2")]);
        assert_eq!(inv[1], vec![p("1/(2*sqrt(t))"), p("0"), p("1/2")]);
        assert_eq!(inv[2], vec![p("0"), p("1"), p("0")]);
    }

    #[test]
    fn singular_has_no_inverse() {
        assert!(inverse(&m(&[&["t", "2*t"], &["1", "2"]]), &z()).is_none());
    }

    #[test]
    fn nullspace_of_rank_one() {
        let ns = nullspace(&m(&[&["t", "2*t"], &["1", "2"]]), &z());
        assert_eq!(ns, vec![vec![p("-2"), p("1")]]);
    }

    #[test]
    fn determinants() {
        assert_eq!(det(&m(&[&["0", "0", "-1/2"], &["0", "1", "0"], &["-1/2", "0", "0"]])), Expr::rational(-1, 4));
        assert!((det_f64(vec![vec![0.0, 2.0], vec![3.0, 1.0]]) + 6.0).abs() < 1e-12);
    }
}
