use super::expr::{cos, exp, ln, sin, Expr, Func, Node};

/// Exact partial derivative with respect to `symbol`, canonicalised by the
/// tree builders (no further simplification).
pub fn differentiate(e: &Expr, symbol: &str) -> Expr {
    if !e.depends_on(symbol) {
        return if e.is_pole() { Expr::pole() } else { Expr::zero() };
    }
    match e.node() {
        Node::Sym(_) => Expr::one(),
        Node::Add(terms) => Expr::add_all(terms.iter().map(|t| differentiate(t, symbol))),
        Node::Mul(fs) => {
            let mut terms = Vec::new();
            for (k, f) in fs.iter().enumerate() {
                if !f.depends_on(symbol) {
                    continue;
                }
                let df = differentiate(f, symbol);
                let mut parts: Vec<Expr> = fs.clone();
                parts[k] = df;
                terms.push(Expr::mul_all(parts));
            }
            Expr::add_all(terms)
        }
        Node::Pow(b, x) => {
            let db = differentiate(b, symbol);
            if !x.depends_on(symbol) {
                let lowered = Expr::pow(b, &(x - Expr::one()));
                Expr::mul_all([x.clone(), lowered, db])
            } else if !b.depends_on(symbol) {
                let dx = differentiate(x, symbol);
                Expr::mul_all([e.clone(), ln(b), dx])
            } else {
                let dx = differentiate(x, symbol);
                let inner = Expr::add_all([
                    Expr::mul_all([dx, ln(b)]),
                    Expr::mul_all([x.clone(), db, b.recip()]),
                ]);
                Expr::mul_all([e.clone(), inner])
            }
        }
        Node::Func(f, u) => {
            let du = differentiate(u, symbol);
            let outer = match f {
                Func::Sin => cos(u),
                Func::Cos => sin(u).neg(),
                Func::Tan => cos(u).powi(-2),
                Func::Cot => sin(u).powi(-2).neg(),
                Func::Exp => exp(u),
                Func::Ln => u.recip(),
                Func::Sqrt => Expr::mul_all([Expr::rational(1, 2), Expr::pow(u, &Expr::rational(-1, 2))]),
                Func::Abs => {
                    let num = Expr::apply(Func::Re, &Expr::mul_all([Expr::apply(Func::Conj, u), du]));
                    return Expr::mul_all([num, e.recip()]);
                }
                Func::Conj | Func::Re | Func::Im => return Expr::apply(*f, &du),
            };
            Expr::mul_all([outer, du])
        }
        Node::Pole => Expr::pole(),
        Node::Num(_) | Node::I | Node::Pi => Expr::zero(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::parse;

    fn d(s: &str, v: &str) -> Expr {
        differentiate(&parse(s).unwrap(), v)
    }

    #[test]
    fn exponential_decay() {
        assert_eq!(d("exp(-r/a0)", "r"), parse("-(1/a0)*exp(-r/a0)").unwrap());
    }

    #[test]
    fn cotangent() {
        assert_eq!(d("cot(theta)", "theta"), parse("-1/sin(theta)^2").unwrap());
    }

    #[test]
    fn oscillating_phase() {
        assert_eq!(d("exp(-i*omega0*t)", "t"), parse("-i*omega0*exp(-i*omega0*t)").unwrap());
    }

    #[test]
    fn constants_vanish() {
        assert_eq!(d("a0^2 + pi", "r"), Expr::zero());
        assert_eq!(d("x^x", "x"), parse("x^x*(ln(x) + 1)").unwrap());
    }
}
