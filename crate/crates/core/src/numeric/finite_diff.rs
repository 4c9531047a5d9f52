use num_complex::Complex;

use crate::scalar::Scalar;
use crate::symexpr::{Binding, EvalError, Expr, Program};

pub const DEFAULT_STEP: f64 = 1e-5;

/// Central difference `(e(s+h) - e(s-h)) / 2h` at `point`.
pub fn finite_diff<T: Scalar>(e: &Expr, symbol: &str, point: &Binding<T>, h: T) -> Result<Complex<T>, EvalError> {
    Stencil::new(e, symbol, point)?.central(h)
}

/// Richardson-extrapolated central difference (steps h and h/2).
pub fn finite_diff_richardson<T: Scalar>(e: &Expr, symbol: &str, point: &Binding<T>, h: T) -> Result<Complex<T>, EvalError> {
    let st = Stencil::new(e, symbol, point)?;
    let d1 = st.central(h)?;
    let d2 = st.central(h / T::of(2.0))?;
    Ok((d2 * T::of(4.0) - d1) / T::of(3.0))
}

struct Stencil<T: Scalar> {
    program: Program<T>,
    values: Vec<Complex<T>>,
    slot: Option<usize>,
}

impl<T: Scalar> Stencil<T> {
    fn new(e: &Expr, symbol: &str, point: &Binding<T>) -> Result<Self, EvalError> {
        let program = Program::compile_auto(e);
        let values = program.values_from(point)?;
        let slot = program.slots().iter().position(|s| s == symbol);
        if slot.is_some() && !point.contains(symbol) {
            return Err(EvalError::Unbound(vec![symbol.to_string()]));
        }
        Ok(Stencil { program, values, slot })
    }

    fn central(&self, h: T) -> Result<Complex<T>, EvalError> {
        let Some(k) = self.slot else {
            return Ok(Complex::new(T::zero(), T::zero()));
        };
        let mut v = self.values.clone();
        let x = v[k];
        v[k] = x + h;
        let up = self.program.eval(&v)?;
        v[k] = x - h;
        let down = self.program.eval(&v)?;
        Ok((up - down) / (h + h))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::parse;
    use std::f64::consts::FRAC_PI_2;

    fn at(s: &str, x: f64) -> Binding<f64> {
        Binding::new().with(s, x)
    }

    #[test]
    fn decay_slope() {
        let d = finite_diff(&parse("exp(-r)").unwrap(), "r", &at("r", 1.0), 1e-5).unwrap();
        assert!((d.re + (-1.0f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn square() {
        let d = finite_diff(&parse("r^2").unwrap(), "r", &at("r", 3.0), 1e-4).unwrap();
        assert!((d.re - 6.0).abs() < 1e-8);
    }

    #[test]
    fn cot_at_right_angle() {
        let d = finite_diff(&parse("cot(theta)").unwrap(), "theta", &at("theta", FRAC_PI_2), 1e-5).unwrap();
        assert!((d.re + 1.0).abs() < 1e-9);
    }

    #[test]
    fn richardson_is_sharper() {
        let e = parse("sin(3*x)").unwrap();
        let exact = 3.0 * (3.0f64 * 0.4).cos();
        let plain = finite_diff(&e, "x", &at("x", 0.4), 1e-2).unwrap().re;
        let rich = finite_diff_richardson(&e, "x", &at("x", 0.4), 1e-2).unwrap().re;
        assert!((rich - exact).abs() < (plain - exact).abs() / 100.0);
    }

    #[test]
    fn stencil_pole() {
        let e = parse("1/(r - 1)").unwrap();
        assert!(finite_diff(&e, "r", &at("r", 1.5), 0.5).is_err());
    }
}
