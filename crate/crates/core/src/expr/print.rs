use num_traits::{One, Signed};

use super::{Expr, Node, Q};

pub(super) fn to_string(e: &Expr) -> String {
    let mut s = String::new();
    write_expr(e, &mut s);
    s
}

fn write_expr(e: &Expr, out: &mut String) {
    match e.node() {
        Node::Add(ts) => {
            // Constants print last: `u - 1` rather than `-1 + u`.
            let ordered = ts.iter().filter(|t| t.as_num().is_none()).chain(ts.iter().filter(|t| t.as_num().is_some()));
            for (i, t) in ordered.enumerate() {
                let (c, rest) = t.split_coef();
                if c.is_negative() {
                    out.push_str(if i == 0 { "-" } else { " - " });
                    write_product(&-c, &rest, out);
                } else {
                    if i > 0 {
                        out.push_str(" + ");
                    }
                    write_product(&c, &rest, out);
                }
            }
        }
        Node::Num(v) => write_num(v, out),
        Node::Mul(_) | Node::Pow(..) => {
            let (c, rest) = e.split_coef();
            if c.is_negative() {
                out.push('-');
                write_product(&-c, &rest, out);
            } else {
                write_product(&c, &rest, out);
            }
        }
        Node::Sym(s) => out.push_str(s),
        Node::Fn(f, a) => {
            out.push_str(f.name());
            out.push('(');
            write_expr(a, out);
            out.push(')');
        }
    }
}

fn write_num(v: &Q, out: &mut String) {
    if v.is_integer() {
        out.push_str(&v.numer().to_string());
    } else {
        out.push_str(&format!("{}/{}", v.numer(), v.denom()));
    }
}

fn factors_of(rest: &Expr) -> Vec<Expr> {
    match rest.node() {
        Node::Mul(fs) => fs.clone(),
        _ if rest.is_one_node() => vec![],
        _ => vec![rest.clone()],
    }
}

/// Writes `c * rest` for a non-negative coefficient, moving negative powers below a slash.
fn write_product(c: &Q, rest: &Expr, out: &mut String) {
    let mut num: Vec<String> = Vec::new();
    let mut den: Vec<String> = Vec::new();
    let mut num_ends_in_int_power = false;
    for f in factors_of(rest) {
        match f.node() {
            Node::Pow(b, e) if e.is_negative() => den.push(power_string(b, &-e)),
            _ => {
                num_ends_in_int_power = matches!(f.node(), Node::Pow(_, e) if e.is_integer());
                num.push(atom_in_product(&f));
            }
        }
    }
    let cn = c.numer().clone();
    let cd = c.denom().clone();
    let single_sum_den = matches!(factors_of(rest).iter().filter(|f| matches!(f.node(), Node::Pow(_, e) if e.is_negative())).collect::<Vec<_>>()[..],
        [f] if matches!(f.node(), Node::Pow(b, e) if matches!(b.node(), Node::Add(_)) && (-e).is_one()));
    if single_sum_den && !cd.is_one() {
        // `3/(2*(x + 1))` would re-parse with the 2 distributed over the sum.
        out.push_str(&format!("{cn}/{cd}"));
        if !num.is_empty() {
            out.push('*');
            out.push_str(&num.join("*"));
        }
        out.push('/');
        out.push_str(&den[0]);
        return;
    }
    let den_is_bare_int = den.is_empty() && !cd.is_one();
    if den_is_bare_int && num_ends_in_int_power {
        // `x^2/3` would read as a rational exponent; lead with the coefficient instead.
        out.push_str(&format!("{cn}/{cd}*"));
        out.push_str(&num.join("*"));
        return;
    }
    if !cn.is_one() || num.is_empty() {
        num.insert(0, cn.to_string());
    }
    out.push_str(&num.join("*"));
    if !cd.is_one() {
        den.insert(0, cd.to_string());
    }
    match den.len() {
        0 => {}
        1 => {
            out.push('/');
            out.push_str(&den[0]);
        }
        _ => {
            out.push_str("/(");
            out.push_str(&den.join("*"));
            out.push(')');
        }
    }
}

fn atom_in_product(f: &Expr) -> String {
    match f.node() {
        Node::Add(_) => format!("({})", to_string(f)),
        Node::Pow(b, e) => power_string(b, e),
        _ => to_string(f),
    }
}

fn power_string(b: &Expr, e: &Q) -> String {
    let base = match b.node() {
        Node::Sym(_) | Node::Fn(..) => to_string(b),
        Node::Num(v) if v.is_integer() && !v.is_negative() => to_string(b),
        _ => format!("({})", to_string(b)),
    };
    if e.is_one() {
        return base;
    }
    if e.is_integer() && e.is_positive() {
        format!("{base}^{}", e.numer())
    } else {
        let mut s = String::new();
        write_num(e, &mut s);
        format!("{base}^({s})")
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::{parse, Symbols};

    fn rt(s: &str) -> String {
        let syms = Symbols::new(["t", "x", "u", "v", "w"]);
        let e = parse(s, &syms).unwrap();
        let printed = e.to_string();
        assert_eq!(parse(&printed, &syms).unwrap(), e, "round trip of {printed}");
        printed
    }

    #[test]
    fn readable_output() {
        assert_eq!(rt("x*v"), "v*x");
        assert_eq!(rt("-sqrt(v)/(4*v)"), "-1/(4*v^(1/2))");
        assert_eq!(rt("(x^2)/3"), "1/3*x^2");
        assert_eq!(rt("x/3"), "x/3");
        assert_eq!(rt("u - 1"), "u - 1");
        assert_eq!(rt("sqrt(-2*u+w^2)"), "(-2*u + w^2)^(1/2)");
        assert_eq!(rt("-x - 1"), "-x - 1");
        assert_eq!(rt("-3*u^2/(4*v*sqrt(v))"), "-3*u^2/(4*v^(3/2))");
        assert_eq!(rt("1/(v^2)"), "1/v^2");
        assert_eq!(rt("sin(t)^2 + cos(t)"), "sin(t)^2 + cos(t)");
    }

    #[test]
    fn coefficient_over_a_sum_round_trips() {
        assert_eq!(rt("(3/2)/(x^2 + 1)"), "3/2/(x^2 + 1)");
        assert_eq!(rt("x^2/(2*x + 2)"), "x^2/(2*x + 2)");
        assert_eq!(rt("(3/2)*u^2/(x + 1)"), "3/2*u^2/(x + 1)");
    }

    #[test]
    fn awkward_shapes_round_trip() {
        rt("(x^2)^(1/2)");
        rt("(-2*x)^(1/2)");
        rt("(-2)^(1/2)");
        rt("2^(1/2)*3");
        rt("(x+1)^(-3/2)*u");
        rt("-(x+u)^2/(3*v)");
        rt("exp(-t)/ln(v)");
    }
}
