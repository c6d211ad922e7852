use super::{Expr, Func, Node};

impl Expr {
    /// Partial derivative with respect to the symbol `s`.
    pub fn diff(&self, s: &str) -> Expr {
        if !self.depends_on(s) {
            return Expr::zero();
        }
        match self.node() {
            Node::Num(_) => Expr::zero(),
            Node::Sym(n) => {
                if &**n == s {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Node::Add(ts) => Expr::add(ts.iter().map(|t| t.diff(s)).collect()),
            Node::Mul(fs) => {
                let mut terms = Vec::new();
                for (i, f) in fs.iter().enumerate() {
                    let df = f.diff(s);
                    if df.is_zero_node() {
                        continue;
                    }
                    let mut prod: Vec<Expr> = fs.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, g)| g.clone()).collect();
                    prod.push(df);
                    terms.push(Expr::mul(prod));
                }
                Expr::add(terms)
            }
            Node::Pow(b, e) => {
                let db = b.diff(s);
                Expr::mul(vec![Expr::num(e.clone()), Expr::pow(b.clone(), e - super::qi(1)), db])
            }
            Node::Fn(f, a) => {
                let da = a.diff(s);
                let outer = match f {
                    Func::Exp => self.clone(),
                    Func::Ln => a.recip(),
                    Func::Sin => Expr::func(Func::Cos, a.clone()),
                    Func::Cos => -Expr::func(Func::Sin, a.clone()),
                };
                outer * da
            }
        }
    }
}
