use std::collections::BTreeMap;

use super::binding::Binding;
use super::expr::{Expr, Node};
use crate::scalar::Scalar;

/// Replaces symbols by expressions; the result is rebuilt canonically, so a
/// vanishing denominator turns into a pole marker.
pub fn substitute(e: &Expr, table: &BTreeMap<String, Expr>) -> Expr {
    if table.is_empty() {
        return e.clone();
    }
    e.map_bottom_up(&mut |node| match node.node() {
        Node::Sym(s) => table.get(&**s).cloned().unwrap_or(node),
        _ => node,
    })
}

pub fn substitute_one(e: &Expr, symbol: &str, value: &Expr) -> Expr {
    let mut table = BTreeMap::new();
    table.insert(symbol.to_string(), value.clone());
    substitute(e, &table)
}

/// Substitutes numeric values as float constants.
pub fn substitute_values<T: Scalar>(e: &Expr, binding: &Binding<T>) -> Expr {
    let table = binding
        .iter()
        .map(|(k, v)| {
            let re = Expr::float(v.re.to_f64_lossy());
            let value = if v.im == T::zero() {
                re
            } else {
                re + Expr::float(v.im.to_f64_lossy()) * Expr::i()
            };
            (k.to_string(), value)
        })
        .collect();
    substitute(e, &table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::{parse, simplify};

    #[test]
    fn cot_at_right_angle() {
        let e = parse("cot(theta)^2").unwrap();
        let half_pi = parse("pi/2").unwrap();
        assert_eq!(substitute_one(&e, "theta", &half_pi), Expr::zero());
    }

    #[test]
    fn vanishing_denominator_is_pole() {
        let k = parse("(1/r^2)*(1 - cot(theta)^2/(1 - r/(2*a0))^2)").unwrap();
        let at = substitute_one(&k, "r", &parse("2*a0").unwrap());
        assert!(at.contains_pole());
    }

    #[test]
    fn scale_factor_into_curvature() {
        // S^2 from the theta-theta route substituted into k = (1 - S^2/g_rr)/r^2.
        let k = parse("(1 - S2/grr)/r^2").unwrap();
        let mut table = BTreeMap::new();
        table.insert("S2".to_string(), parse("C1^2*cos(theta)^2*cos(phi)^2*exp(-r/a0)*cos(2*omega0*t)").unwrap());
        table.insert(
            "grr".to_string(),
            parse("C1^2*sin(theta)^2*cos(phi)^2*(1 - r/(2*a0))^2*exp(-r/a0)*cos(2*omega0*t)").unwrap(),
        );
        let got = simplify(&substitute(&k, &table));
        let want = simplify(&parse("(1/r^2)*(1 - cot(theta)^2/(1 - r/(2*a0))^2)").unwrap());
        assert_eq!(got, want);
        assert_eq!(
            got.free_symbols().into_iter().collect::<Vec<_>>(),
            vec!["a0".to_string(), "r".to_string(), "theta".to_string()]
        );
    }
}
