//! Fixed rewrite set applied to a fixpoint.
//!
//! On top of what the tree builders already canonicalise (constant folding,
//! like terms, power merging) this pass:
//!
//! * rewrites `tan`/`cot` into `sin`/`cos`,
//! * merges `exp(a)*exp(b)` into `exp(a + b)` and `exp(a)^n` into `exp(n*a)`,
//! * resolves `re`, `im`, `conj` and `abs` when real and imaginary parts are
//!   syntactically separable (all symbols are real),
//! * applies `sin(u)^2 + cos(u)^2 = 1`, `cos(u)^2 - 1 = -sin(u)^2` and
//!   `cos(u)^2 - sin(u)^2 = cos(2*u)`,
//! * distributes products over sums inside a sum when the result is smaller,
//! * pulls common factors and denominators out of sums (normalisation over
//!   a common denominator without expanding sum factors).

use std::collections::BTreeMap;

use super::expr::{cos, exp, sin, Expr, Func, Node};
use super::number::Number;

const MAX_PASSES: usize = 32;

pub fn simplify(e: &Expr) -> Expr {
    let mut cur = e.clone();
    for _ in 0..MAX_PASSES {
        let next = cur.map_bottom_up(&mut rewrite);
        if next == cur {
            return next;
        }
        cur = next;
    }
    cur
}

fn rewrite(e: Expr) -> Expr {
    match e.node() {
        Node::Func(Func::Tan, u) => Expr::mul_all([sin(u), cos(u).recip()]),
        Node::Func(Func::Cot, u) => Expr::mul_all([cos(u), sin(u).recip()]),
        Node::Func(Func::Conj, u) => conj_expand(u).unwrap_or(e),
        Node::Func(Func::Re, u) => split_complex(u).map(|(a, _)| a).unwrap_or(e),
        Node::Func(Func::Im, u) => split_complex(u).map(|(_, b)| b).unwrap_or(e),
        Node::Func(Func::Abs, u) => match split_complex(u) {
            Some((a, b)) if !b.is_zero() => {
                Expr::pow(&Expr::add_all([a.powi(2), b.powi(2)]), &Expr::rational(1, 2))
            }
            _ => e,
        },
        Node::Pow(b, x) => match b.node() {
            Node::Func(Func::Exp, a)
                if x.as_number().is_some_and(Number::is_integer) || (a.is_real() && x.is_real()) =>
            {
                exp(&Expr::mul_all([x.clone(), a.clone()]))
            }
            _ => e,
        },
        Node::Mul(_) => merge_exponentials(&e),
        Node::Add(_) => {
            let t = pythagoras(&distribute(&e));
            match t.node() {
                Node::Add(_) => factor_terms(&t),
                _ => t,
            }
        }
        _ => e,
    }
}

/// Expands `a*(b + c)` terms of a sum; kept only if like terms cancel enough
/// to make the sum strictly smaller.
fn distribute(e: &Expr) -> Expr {
    let Node::Add(ts) = e.node() else { return e.clone() };
    let mut out = Vec::with_capacity(ts.len());
    let mut changed = false;
    for t in ts {
        let Node::Mul(fs) = t.node() else {
            out.push(t.clone());
            continue;
        };
        let Some(k) = fs.iter().position(|f| matches!(f.node(), Node::Add(_))) else {
            out.push(t.clone());
            continue;
        };
        let Node::Add(inner) = fs[k].node() else { unreachable!() };
        let rest: Vec<Expr> = fs.iter().enumerate().filter(|&(j, _)| j != k).map(|(_, f)| f.clone()).collect();
        out.extend(inner.iter().map(|u| Expr::mul_all(rest.iter().cloned().chain([u.clone()]))));
        changed = true;
    }
    if !changed {
        return e.clone();
    }
    let expanded = Expr::add_all(out);
    if expanded.size() < e.size() {
        expanded
    } else {
        e.clone()
    }
}

fn merge_exponentials(e: &Expr) -> Expr {
    let Node::Mul(fs) = e.node() else { return e.clone() };
    let mut args = Vec::new();
    let mut rest = Vec::new();
    for f in fs {
        match f.node() {
            Node::Func(Func::Exp, a) => args.push(a.clone()),
            Node::Pow(b, x) => match (b.node(), x.as_number()) {
                (Node::Func(Func::Exp, a), Some(n)) if n.is_integer() => {
                    args.push(Expr::mul_all([x.clone(), a.clone()]))
                }
                _ => rest.push(f.clone()),
            },
            _ => rest.push(f.clone()),
        }
    }
    if args.len() < 2 {
        return e.clone();
    }
    rest.push(exp(&Expr::add_all(args)));
    Expr::mul_all(rest)
}

/// `k*R*sin(u)^2 + k*R*cos(u)^2 -> k*R`, `k*R*cos(u)^2 - k*R -> -k*R*sin(u)^2`
/// and `k*R*cos(u)^2 - k*R*sin(u)^2 -> k*R*cos(2*u)`.
fn pythagoras(e: &Expr) -> Expr {
    let Node::Add(ts) = e.node() else { return e.clone() };
    let mut terms = ts.clone();
    'outer: loop {
        for i in 0..terms.len() {
            let factors = match terms[i].node() {
                Node::Mul(fs) => fs.clone(),
                _ => vec![terms[i].clone()],
            };
            for f in &factors {
                let (b, x) = f.as_base_exp();
                if x != Expr::int(2) {
                    continue;
                }
                let Node::Func(func @ (Func::Sin | Func::Cos), u) = b.node() else {
                    continue;
                };
                let stripped = Expr::mul_all([terms[i].clone(), f.recip()]);
                let other = if *func == Func::Sin { cos(u) } else { sin(u) };
                let opposite = Expr::mul_all([stripped.neg(), other.powi(2)]);
                if let Some(j) = terms.iter().position(|t| *t == opposite) {
                    let double = cos(&Expr::mul_all([Expr::int(2), u.clone()]));
                    let merged = if *func == Func::Sin { (&stripped * &double).neg() } else { &stripped * &double };
                    replace_pair(&mut terms, i, j, merged);
                    continue 'outer;
                }
                if *func == Func::Sin {
                    let partner = Expr::mul_all([stripped.clone(), cos(u).powi(2)]);
                    if let Some(j) = terms.iter().position(|t| *t == partner) {
                        replace_pair(&mut terms, i, j, stripped);
                        continue 'outer;
                    }
                } else {
                    let partner = stripped.neg();
                    if let Some(j) = terms.iter().position(|t| *t == partner) {
                        let merged = Expr::mul_all([partner, sin(u).powi(2)]);
                        replace_pair(&mut terms, i, j, merged);
                        continue 'outer;
                    }
                }
            }
        }
        break;
    }
    Expr::add_all(terms)
}

fn replace_pair(terms: &mut Vec<Expr>, i: usize, j: usize, merged: Expr) {
    let (hi, lo) = if i > j { (i, j) } else { (j, i) };
    terms.remove(hi);
    terms.remove(lo);
    terms.push(merged);
}

/// Pulls the minimum power of every base shared across the terms of a sum,
/// which also brings the sum over its common denominator.
pub fn factor_terms(e: &Expr) -> Expr {
    let Node::Add(ts) = e.node() else { return e.clone() };
    let decomposed: Vec<(Number, BTreeMap<Expr, Number>)> = ts.iter().map(decompose_term).collect();
    let mut common: BTreeMap<Expr, Number> = BTreeMap::new();
    for (_, powers) in &decomposed {
        for base in powers.keys() {
            if common.contains_key(base) {
                continue;
            }
            let lowest = decomposed
                .iter()
                .map(|(_, p)| p.get(base).cloned().unwrap_or_else(Number::zero))
                .min_by(|a, b| a.total_cmp(b))
                .unwrap_or_else(Number::zero);
            common.insert(base.clone(), lowest);
        }
    }
    common.retain(|_, m| !m.is_zero());
    if common.is_empty() {
        return e.clone();
    }
    let inner = Expr::add_all(decomposed.into_iter().map(|(c, mut powers)| {
        for (k, m) in &common {
            let e0 = powers.remove(k).unwrap_or_else(Number::zero);
            let left = e0.add(&m.neg());
            if !left.is_zero() {
                powers.insert(k.clone(), left);
            }
        }
        let mut fs = vec![Expr::number(c)];
        fs.extend(powers.into_iter().map(|(b, x)| Expr::pow(&b, &Expr::number(x))));
        Expr::mul_all(fs)
    }));
    let mut fs: Vec<Expr> = common
        .into_iter()
        .map(|(b, x)| Expr::pow(&b, &Expr::number(x)))
        .collect();
    fs.push(inner);
    Expr::mul_all(fs)
}

fn decompose_term(t: &Expr) -> (Number, BTreeMap<Expr, Number>) {
    let (c, rest) = t.split_coeff();
    let mut powers = BTreeMap::new();
    let factors = match rest.node() {
        Node::Mul(fs) => fs.clone(),
        _ if rest.is_one() => Vec::new(),
        _ => vec![rest.clone()],
    };
    for f in factors {
        match f.node() {
            Node::Pow(b, x) if x.is_number() => {
                powers.insert(b.clone(), x.as_number().unwrap().clone());
            }
            _ => {
                powers.insert(f.clone(), Number::one());
            }
        }
    }
    (c, powers)
}

/// Pushes complex conjugation inwards where that is exact.
fn conj_expand(u: &Expr) -> Option<Expr> {
    if u.is_real() {
        return Some(u.clone());
    }
    let c = |x: &Expr| Expr::apply(Func::Conj, x);
    Some(match u.node() {
        Node::I => Expr::i().neg(),
        Node::Add(ts) => Expr::add_all(ts.iter().map(c)),
        Node::Mul(fs) => Expr::mul_all(fs.iter().map(c)),
        Node::Pow(b, x) if x.as_number().is_some_and(Number::is_integer) => Expr::pow(&c(b), x),
        Node::Func(f @ (Func::Exp | Func::Sin | Func::Cos), a) => Expr::apply(*f, &c(a)),
        Node::Func(Func::Conj, a) => a.clone(),
        _ => return None,
    })
}

/// Real and imaginary parts `(u, v)` of `e = u + i v`, when they can be read
/// off syntactically.
pub fn split_complex(e: &Expr) -> Option<(Expr, Expr)> {
    if e.is_real() {
        return Some((e.clone(), Expr::zero()));
    }
    match e.node() {
        Node::I => Some((Expr::zero(), Expr::one())),
        Node::Add(ts) => {
            let mut re = Vec::new();
            let mut im = Vec::new();
            for t in ts {
                let (a, b) = split_complex(t)?;
                re.push(a);
                im.push(b);
            }
            Some((Expr::add_all(re), Expr::add_all(im)))
        }
        Node::Mul(fs) => {
            let (real, complex): (Vec<Expr>, Vec<Expr>) = fs.iter().cloned().partition(Expr::is_real);
            let mut acc = (Expr::one(), Expr::zero());
            for f in &complex {
                let p = split_complex(f)?;
                acc = complex_mul(&acc, &p);
            }
            let r = Expr::mul_all(real);
            Some((&r * &acc.0, &r * &acc.1))
        }
        Node::Pow(b, x) => {
            let n = x.as_number()?.as_i64()?;
            if n.abs() > 12 {
                return None;
            }
            let base = split_complex(b)?;
            let mut acc = (Expr::one(), Expr::zero());
            for _ in 0..n.abs() {
                acc = complex_mul(&acc, &base);
            }
            if n < 0 {
                let den = Expr::add_all([acc.0.powi(2), acc.1.powi(2)]).recip();
                acc = (&acc.0 * &den, (&acc.1 * &den).neg());
            }
            Some(acc)
        }
        Node::Func(Func::Exp, z) => {
            let (a, b) = split_complex(z)?;
            if b.is_zero() {
                return Some((e.clone(), Expr::zero()));
            }
            let m = exp(&a);
            Some((&m * cos(&b), &m * sin(&b)))
        }
        Node::Func(Func::Conj, z) => {
            let (a, b) = split_complex(z)?;
            Some((a, b.neg()))
        }
        _ => None,
    }
}

fn complex_mul(p: &(Expr, Expr), q: &(Expr, Expr)) -> (Expr, Expr) {
    (
        Expr::add_all([&p.0 * &q.0, (&p.1 * &q.1).neg()]),
        Expr::add_all([&p.0 * &q.1, &p.1 * &q.0]),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::parse;

    fn simp(s: &str) -> Expr {
        simplify(&parse(s).unwrap())
    }

    #[test]
    fn pythagorean_identity() {
        assert_eq!(simp("sin(theta)^2 + cos(theta)^2"), Expr::one());
        assert_eq!(simp("a*sin(x)^2 + a*cos(x)^2 + b"), parse("a + b").unwrap());
        assert_eq!(simp("cos(x)^2 - 1"), parse("-sin(x)^2").unwrap());
    }

    #[test]
    fn exponentials_merge() {
        assert_eq!(simp("exp(-r/(2*a0))*exp(-r/(2*a0))"), parse("exp(-r/a0)").unwrap());
        assert_eq!(simp("exp(x)^3/exp(x)"), parse("exp(2*x)").unwrap());
    }

    #[test]
    fn identity_elements_vanish() {
        assert_eq!(simp("x*1 + 0"), Expr::sym("x"));
    }

    #[test]
    fn real_part_of_phase() {
        assert_eq!(simp("re(exp(-i*omega0*t)^2)"), parse("cos(2*omega0*t)").unwrap());
        assert_eq!(simp("im(3 + 2*i*x)"), parse("2*x").unwrap());
        assert_eq!(simp("conj(x*exp(i*t))*exp(i*t)"), Expr::sym("x"));
        assert_eq!(simp("abs(x + i*y)"), parse("sqrt(x^2 + y^2)").unwrap());
    }

    #[test]
    fn common_denominator() {
        let e = simp("1/x + 1/y");
        assert_eq!(e, parse("(x + y)/(x*y)").unwrap());
        assert_eq!(simp("x*y + x*z"), parse("x*(y + z)").unwrap());
    }

    #[test]
    fn cot_becomes_ratio() {
        assert_eq!(simp("cot(x)^2"), parse("cos(x)^2/sin(x)^2").unwrap());
        assert_eq!(simp("tan(x)*cot(x)"), Expr::one());
    }

    #[test]
    fn idempotent_on_samples() {
        for s in ["sin(x)^2*y + y*cos(x)^2 + 1/(x+1)", "exp(i*x)*exp(-i*x) + re(exp(i*x))", "(1 - r/(2*a0))^2*exp(-r/a0)"] {
            let once = simp(s);
            assert_eq!(simplify(&once), once, "{s}");
        }
    }
}
