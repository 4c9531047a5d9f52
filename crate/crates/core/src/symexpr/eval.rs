//! Numeric evaluation through a flat stack program.
//!
//! Expressions are compiled once against an ordered list of symbol slots and
//! then evaluated many times (quadrature, grids, sampling).

use num_complex::Complex;
use thiserror::Error;

use super::binding::Binding;
use super::expr::{Expr, Func, Node};
use super::number::Number;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("unbound symbols: {}", .0.join(", "))]
    Unbound(Vec<String>),
    #[error("pole in `{0}`")]
    Pole(String),
    #[error("non-finite value from `{0}`")]
    NonFinite(String),
}

impl EvalError {
    pub fn is_pole(&self) -> bool {
        matches!(self, EvalError::Pole(_) | EvalError::NonFinite(_))
    }
}

#[derive(Debug, Clone)]
enum Op<T> {
    Const(Complex<T>),
    Load(usize),
    Add(usize),
    Mul(usize),
    PowInt(i32, usize),
    Sqrt,
    Pow(usize),
    Func(Func, usize),
    Pole(usize),
}

/// A compiled expression.
#[derive(Debug, Clone)]
pub struct Program<T: Scalar> {
    ops: Vec<Op<T>>,
    slots: Vec<String>,
    /// Subtrees referenced by ops that can fail, for diagnostics.
    sites: Vec<Expr>,
}

impl<T: Scalar> Program<T> {
    /// Compiles `e` against the given symbol order. Every free symbol must
    /// appear in `slots`.
    pub fn compile(e: &Expr, slots: &[String]) -> Result<Self, EvalError> {
        let missing: Vec<String> = e.free_symbols().into_iter().filter(|s| !slots.contains(s)).collect();
        if !missing.is_empty() {
            return Err(EvalError::Unbound(missing));
        }
        let mut p = Program {
            ops: Vec::new(),
            slots: slots.to_vec(),
            sites: Vec::new(),
        };
        p.emit(e);
        Ok(p)
    }

    /// Compiles with the expression's own free symbols as slots (sorted).
    pub fn compile_auto(e: &Expr) -> Self {
        let slots: Vec<String> = e.free_symbols().into_iter().collect();
        Program::compile(e, &slots).expect("all free symbols are slots")
    }

    pub fn slots(&self) -> &[String] {
        &self.slots
    }

    fn site(&mut self, e: &Expr) -> usize {
        self.sites.push(e.clone());
        self.sites.len() - 1
    }

    fn emit(&mut self, e: &Expr) {
        match e.node() {
            Node::Num(n) => self.ops.push(Op::Const(Complex::new(T::of(n.to_f64()), T::zero()))),
            Node::I => self.ops.push(Op::Const(Complex::new(T::zero(), T::one()))),
            Node::Pi => self.ops.push(Op::Const(Complex::new(T::PI(), T::zero()))),
            Node::Sym(s) => {
                let k = self.slots.iter().position(|x| **x == **s).expect("checked in compile");
                self.ops.push(Op::Load(k));
            }
            Node::Add(ts) => {
                for t in ts {
                    self.emit(t);
                }
                self.ops.push(Op::Add(ts.len()));
            }
            Node::Mul(fs) => {
                for f in fs {
                    self.emit(f);
                }
                self.ops.push(Op::Mul(fs.len()));
            }
            Node::Pow(b, x) => {
                self.emit(b);
                let site = self.site(e);
                match x.as_number() {
                    Some(n) if n.as_i64().is_some_and(|k| k.abs() <= i32::MAX as i64) => {
                        self.ops.push(Op::PowInt(n.as_i64().unwrap() as i32, site));
                    }
                    Some(n) if *n == Number::ratio(1, 2) => self.ops.push(Op::Sqrt),
                    _ => {
                        self.emit(x);
                        self.ops.push(Op::Pow(site));
                    }
                }
            }
            Node::Func(f, a) => {
                self.emit(a);
                let site = self.site(e);
                self.ops.push(Op::Func(*f, site));
            }
            Node::Pole => {
                let site = self.site(e);
                self.ops.push(Op::Pole(site));
            }
        }
    }

    fn pole(&self, site: usize) -> EvalError {
        EvalError::Pole(self.sites[site].to_string())
    }

    /// Evaluates with slot values in `compile` order.
    pub fn eval(&self, values: &[Complex<T>]) -> Result<Complex<T>, EvalError> {
        let mut stack = Vec::with_capacity(16);
        self.eval_with(values, &mut stack)
    }

    pub fn eval_real(&self, values: &[T]) -> Result<Complex<T>, EvalError> {
        let vals: Vec<Complex<T>> = values.iter().map(|v| Complex::new(*v, T::zero())).collect();
        self.eval(&vals)
    }

    pub fn eval_with(&self, values: &[Complex<T>], stack: &mut Vec<Complex<T>>) -> Result<Complex<T>, EvalError> {
        stack.clear();
        let zero = Complex::new(T::zero(), T::zero());
        for op in &self.ops {
            match op {
                Op::Const(c) => stack.push(*c),
                Op::Load(k) => stack.push(values[*k]),
                Op::Add(n) => {
                    let at = stack.len() - n;
                    let s = stack[at..].iter().fold(zero, |acc, v| acc + v);
                    stack.truncate(at);
                    stack.push(s);
                }
                Op::Mul(n) => {
                    let at = stack.len() - n;
                    let p = stack[at..].iter().fold(Complex::new(T::one(), T::zero()), |acc, v| acc * v);
                    stack.truncate(at);
                    stack.push(p);
                }
                Op::PowInt(k, site) => {
                    let b = stack.pop().unwrap();
                    if *k < 0 && b == zero {
                        return Err(self.pole(*site));
                    }
                    let v = if b.im == T::zero() {
                        Complex::new(b.re.powi(*k), T::zero())
                    } else {
                        b.powi(*k)
                    };
                    stack.push(v);
                }
                Op::Sqrt => {
                    let b = stack.pop().unwrap();
                    let v = if b.im == T::zero() && b.re >= T::zero() {
                        Complex::new(b.re.sqrt(), T::zero())
                    } else {
                        b.sqrt()
                    };
                    stack.push(v);
                }
                Op::Pow(site) => {
                    let x = stack.pop().unwrap();
                    let b = stack.pop().unwrap();
                    if b == zero {
                        if x.re > T::zero() {
                            stack.push(zero);
                            continue;
                        }
                        return Err(self.pole(*site));
                    }
                    let v = if b.im == T::zero() && b.re > T::zero() && x.im == T::zero() {
                        Complex::new(b.re.powf(x.re), T::zero())
                    } else {
                        b.powc(x)
                    };
                    stack.push(v);
                }
                Op::Func(f, site) => {
                    let a = stack.pop().unwrap();
                    stack.push(self.apply(*f, a, *site)?);
                }
                Op::Pole(site) => return Err(self.pole(*site)),
            }
        }
        let out = stack.pop().unwrap_or(zero);
        if !(out.re.is_finite() && out.im.is_finite()) {
            return Err(EvalError::NonFinite(self.sites.first().map(|e| e.to_string()).unwrap_or_default()));
        }
        Ok(out)
    }

    fn apply(&self, f: Func, a: Complex<T>, site: usize) -> Result<Complex<T>, EvalError> {
        let real = a.im == T::zero();
        let r = |x: T| Complex::new(x, T::zero());
        Ok(match f {
            Func::Sin => {
                if real {
                    r(a.re.sin())
                } else {
                    a.sin()
                }
            }
            Func::Cos => {
                if real {
                    r(a.re.cos())
                } else {
                    a.cos()
                }
            }
            Func::Tan => {
                let c = if real { r(a.re.cos()) } else { a.cos() };
                if c == r(T::zero()) {
                    return Err(self.pole(site));
                }
                if real {
                    r(a.re.tan())
                } else {
                    a.tan()
                }
            }
            Func::Cot => {
                let s = if real { r(a.re.sin()) } else { a.sin() };
                if s == r(T::zero()) {
                    return Err(self.pole(site));
                }
                if real {
                    r(a.re.cos() / a.re.sin())
                } else {
                    a.cos() / s
                }
            }
            Func::Exp => {
                if real {
                    r(a.re.exp())
                } else {
                    a.exp()
                }
            }
            Func::Ln => {
                if a == r(T::zero()) {
                    return Err(self.pole(site));
                }
                if real && a.re > T::zero() {
                    r(a.re.ln())
                } else {
                    a.ln()
                }
            }
            Func::Sqrt => {
                if real && a.re >= T::zero() {
                    r(a.re.sqrt())
                } else {
                    a.sqrt()
                }
            }
            Func::Abs => r(a.norm()),
            Func::Conj => a.conj(),
            Func::Re => r(a.re),
            Func::Im => r(a.im),
        })
    }

    /// Gathers slot values from a binding.
    pub fn values_from(&self, b: &Binding<T>) -> Result<Vec<Complex<T>>, EvalError> {
        let mut missing = Vec::new();
        let vals: Vec<Complex<T>> = self
            .slots
            .iter()
            .map(|s| {
                b.get(s).unwrap_or_else(|| {
                    missing.push(s.clone());
                    Complex::new(T::zero(), T::zero())
                })
            })
            .collect();
        if missing.is_empty() {
            Ok(vals)
        } else {
            Err(EvalError::Unbound(missing))
        }
    }
}

/// Evaluates `e` at the binding. Every free symbol must be bound.
pub fn eval<T: Scalar>(e: &Expr, b: &Binding<T>) -> Result<Complex<T>, EvalError> {
    let p: Program<T> = Program::compile_auto(e);
    let vals = p.values_from(b)?;
    p.eval(&vals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::parse;
    use approx::assert_abs_diff_eq;

    fn at(pairs: &[(&str, f64)]) -> Binding<f64> {
        Binding::from_real_pairs(pairs.iter().copied()).unwrap()
    }

    #[test]
    fn real_part_of_squared_phase() {
        let e = parse("re(exp(-i*omega0*t)^2)").unwrap();
        let v = eval(&e, &at(&[("omega0", 1.0), ("t", 0.5)])).unwrap();
        assert_abs_diff_eq!(v.re, 0.5403023059, epsilon = 1e-10);
    }

    #[test]
    fn decay() {
        let e = parse("exp(-r/a0)").unwrap();
        let v = eval(&e, &at(&[("r", 2.0), ("a0", 1.0)])).unwrap();
        assert_abs_diff_eq!(v.re, 0.1353352832, epsilon = 1e-10);
    }

    #[test]
    fn pole_reported() {
        let e = parse("1/(1 - r/(2*a0))").unwrap();
        let err = eval(&e, &at(&[("r", 2.0), ("a0", 1.0)])).unwrap_err();
        assert!(matches!(err, EvalError::Pole(ref s) if s.contains("r/(2*a0)")), "{err}");
    }

    #[test]
    fn unbound_listed() {
        let e = parse("x + y*z").unwrap();
        let err = eval(&e, &at(&[("y", 1.0)])).unwrap_err();
        assert_eq!(err, EvalError::Unbound(vec!["x".into(), "z".into()]));
    }

    #[test]
    fn single_precision() {
        let e = parse("sqrt(x)*pi").unwrap();
        let b = Binding::<f32>::from_real_pairs([("x", 4.0f32)]).unwrap();
        let v = eval(&e, &b).unwrap();
        assert!((v.re - 2.0 * std::f32::consts::PI).abs() < 1e-5);
    }
}
