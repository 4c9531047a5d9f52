//! Grammar-conformant printing.
//!
//! `Display` prints the canonical tree. [`Expr::pretty`] additionally folds
//! `cos(u)^n / sin(u)^n` into `cot(u)^n`; both forms reparse.

use std::fmt::{self, Write};

use super::expr::{Expr, Func, Node};
use super::number::Number;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Prec {
    Sum = 1,
    Product = 2,
    Power = 3,
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_expr(self, &mut s, false);
        f.write_str(&s)
    }
}

impl Expr {
    /// Presentation form: identical to `Display` except that matching
    /// `cos`/`sin` power pairs print as `cot`.
    pub fn pretty(&self) -> String {
        let mut s = String::new();
        write_expr(self, &mut s, true);
        s
    }
}

fn write_expr(e: &Expr, out: &mut String, pretty: bool) {
    match e.node() {
        Node::Num(n) => write!(out, "{n}").unwrap(),
        Node::I => out.push('i'),
        Node::Pi => out.push_str("pi"),
        Node::Pole => out.push_str("(1/0)"),
        Node::Sym(s) => out.push_str(s),
        Node::Add(terms) => {
            for (k, t) in terms.iter().enumerate() {
                if k == 0 {
                    write_expr(t, out, pretty);
                } else if t.has_negative_sign() {
                    out.push_str(" - ");
                    write_expr(&t.neg(), out, pretty);
                } else {
                    out.push_str(" + ");
                    write_expr(t, out, pretty);
                }
            }
        }
        Node::Mul(_) => write_product(e, out, pretty),
        Node::Pow(b, x) => {
            if let Some(n) = x.as_number() {
                if n.is_negative() {
                    write_product(e, out, pretty);
                    return;
                }
                if *n == Number::ratio(1, 2) {
                    out.push_str("sqrt(");
                    write_expr(b, out, pretty);
                    out.push(')');
                    return;
                }
            }
            write_power(b, x, out, pretty);
        }
        Node::Func(func, a) => {
            out.push_str(func.name());
            out.push('(');
            write_expr(a, out, pretty);
            out.push(')');
        }
    }
}

fn prec_of(e: &Expr) -> Prec {
    match e.node() {
        Node::Add(_) => Prec::Sum,
        Node::Mul(_) => Prec::Product,
        Node::Num(n) => {
            if n.is_negative() {
                Prec::Sum
            } else if n.is_integer() || matches!(n, Number::Float(_)) {
                Prec::Power
            } else {
                Prec::Product
            }
        }
        Node::Pow(_, x) => {
            if x.as_number().is_some_and(Number::is_negative) {
                Prec::Product
            } else {
                Prec::Power
            }
        }
        _ => Prec::Power,
    }
}

fn write_wrapped(e: &Expr, min: Prec, out: &mut String, pretty: bool) {
    let wrap = prec_of(e) < min;
    if wrap {
        out.push('(');
    }
    write_expr(e, out, pretty);
    if wrap {
        out.push(')');
    }
}

fn write_power(base: &Expr, exp: &Expr, out: &mut String, pretty: bool) {
    let base_needs_parens = match base.node() {
        Node::Sym(_) | Node::I | Node::Pi | Node::Func(..) => false,
        Node::Num(n) => n.is_negative() || !n.is_integer() || matches!(n, Number::Float(_)),
        _ => true,
    };
    if base_needs_parens {
        out.push('(');
        write_expr(base, out, pretty);
        out.push(')');
    } else {
        write_expr(base, out, pretty);
    }
    out.push('^');
    let simple_exp = match exp.node() {
        Node::Num(n) => n.is_integer() && !n.is_negative(),
        Node::Sym(_) | Node::Pi => true,
        _ => false,
    };
    if simple_exp {
        write_expr(exp, out, pretty);
    } else {
        out.push('(');
        write_expr(exp, out, pretty);
        out.push(')');
    }
}

/// Writes a product as `[-]num/den`.
fn write_product(e: &Expr, out: &mut String, pretty: bool) {
    let (coeff, rest) = e.split_coeff();
    let mut factors: Vec<Expr> = match rest.node() {
        Node::Mul(fs) => fs.clone(),
        _ if rest.is_one() => Vec::new(),
        _ => vec![rest.clone()],
    };
    if pretty {
        fold_cot(&mut factors);
    }
    let negative = coeff.is_negative();
    let coeff = coeff.abs();
    let mut num: Vec<String> = Vec::new();
    let mut den: Vec<String> = Vec::new();
    match &coeff {
        Number::Rational(r) => {
            if !r.numer().to_string().eq("1") {
                num.push(r.numer().to_string());
            }
            if !r.denom().to_string().eq("1") {
                den.push(r.denom().to_string());
            }
        }
        Number::Float(_) => {
            if !coeff.is_one() {
                num.push(coeff.to_string());
            }
        }
    }
    for f in &factors {
        let mut s = String::new();
        match f.node() {
            Node::Pow(b, x) if x.as_number().is_some_and(Number::is_negative) => {
                let pos = x.as_number().unwrap().neg();
                if pos.is_one() {
                    write_wrapped(b, Prec::Power, &mut s, pretty);
                } else if pos == Number::ratio(1, 2) {
                    s.push_str("sqrt(");
                    write_expr(b, &mut s, pretty);
                    s.push(')');
                } else {
                    write_power(b, &Expr::number(pos), &mut s, pretty);
                }
                den.push(s);
            }
            _ => {
                write_wrapped(f, Prec::Power, &mut s, pretty);
                num.push(s);
            }
        }
    }
    if negative {
        out.push('-');
    }
    if num.is_empty() {
        out.push('1');
    } else {
        out.push_str(&num.join("*"));
    }
    if !den.is_empty() {
        out.push('/');
        if den.len() == 1 {
            out.push_str(&den[0]);
        } else {
            out.push('(');
            out.push_str(&den.join("*"));
            out.push(')');
        }
    }
}

/// Replaces `cos(u)^n * sin(u)^-n` pairs with `cot(u)^n`.
fn fold_cot(factors: &mut Vec<Expr>) {
    let mut k = 0;
    while k < factors.len() {
        let (b, x) = factors[k].as_base_exp();
        let folded = match (b.node(), x.as_number()) {
            (Node::Func(Func::Cos, u), Some(n)) if !n.is_negative() => {
                let want = Expr::pow(&Expr::apply(Func::Sin, u), &Expr::number(n.neg()));
                factors.iter().position(|g| *g == want).map(|j| (j, u.clone(), n.clone()))
            }
            _ => None,
        };
        if let Some((j, u, n)) = folded {
            let cot = Expr::pow(&Expr::apply(Func::Cot, &u), &Expr::number(n));
            factors[k] = cot;
            factors.remove(j);
            if j < k {
                k -= 1;
            }
        }
        k += 1;
    }
}

#[cfg(test)]
mod tests {
    use crate::symexpr::parse;

    fn roundtrip(s: &str) -> String {
        parse(s).unwrap().to_string()
    }

    #[test]
    fn prints_fractions_and_signs() {
        assert_eq!(roundtrip("1 - r/(2*a0)"), "1 - r/(2*a0)");
        assert_eq!(roundtrip("-x^2"), "-x^2");
        assert_eq!(roundtrip("1/r^2"), "1/r^2");
        assert_eq!(roundtrip("sqrt(x)"), "sqrt(x)");
        assert_eq!(roundtrip("x^(1/3)"), "x^(1/3)");
        assert_eq!(roundtrip("(x + y)^2"), "(x + y)^2");
    }

    #[test]
    fn pretty_folds_cot() {
        let e = parse("cos(theta)^2/sin(theta)^2").unwrap();
        assert_eq!(e.pretty(), "cot(theta)^2");
        assert_eq!(e.to_string(), "cos(theta)^2/sin(theta)^2");
    }
}
