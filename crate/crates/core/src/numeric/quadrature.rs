//! Adaptive Gauss–Legendre quadrature, nested over box and spherical domains.

use num_complex::Complex;
use thiserror::Error;

use crate::scalar::Scalar;
use crate::symexpr::{self, Binding, EvalError, Expr, Program};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError {
    #[error("integral did not converge: best value {value}, error estimate {error:e}")]
    NonConvergent { value: f64, error: f64 },
    #[error("integrand cannot be evaluated: {0}")]
    Eval(#[from] EvalError),
    #[error("quadrature order must be at least 2")]
    InvalidOrder,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions {
    /// Nodes per panel.
    pub order: usize,
    /// Absolute tolerance for the whole integral.
    pub abs_tol: f64,
    /// Relative tolerance, applied per panel against the panel value.
    pub rel_tol: f64,
    pub max_depth: u32,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        QuadratureOptions {
            order: 32,
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            max_depth: 40,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult<T> {
    pub value: Complex<T>,
    /// Absolute error estimate (≥ 0).
    pub error: T,
    /// Deepest bisection level used on any axis.
    pub levels: u32,
}

/// Nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// One panel estimate: value plus the error inherited from inner integrals.
type Panel<T> = (Complex<T>, T);

struct Adaptive<'a, T: Scalar> {
    rule: &'a GaussLegendre,
    opts: &'a QuadratureOptions,
    failed: bool,
    deepest: u32,
    _t: std::marker::PhantomData<T>,
}

impl<T: Scalar> Adaptive<'_, T> {
    fn panel<F>(&self, f: &mut F, a: T, b: T) -> Result<Panel<T>, EvalError>
    where
        F: FnMut(T) -> Result<Panel<T>, EvalError>,
    {
        let half = (b - a) / T::of(2.0);
        let mid = (a + b) / T::of(2.0);
        let mut sum = Complex::new(T::zero(), T::zero());
        let mut inherited = T::zero();
        for (x, w) in self.rule.points() {
            let (v, e) = f(mid + half * T::of(x))?;
            sum = sum + v * T::of(w);
            inherited = inherited + e * T::of(w);
        }
        Ok((sum * half, inherited * half.abs()))
    }

    /// Returns (value, local error, inherited error).
    fn run<F>(&mut self, f: &mut F, a: T, b: T, whole: Panel<T>, tol: T, depth: u32) -> Result<(Complex<T>, T, T), EvalError>
    where
        F: FnMut(T) -> Result<Panel<T>, EvalError>,
    {
        self.deepest = self.deepest.max(depth);
        let mid = (a + b) / T::of(2.0);
        let left = self.panel(f, a, mid)?;
        let right = self.panel(f, mid, b)?;
        let halves = left.0 + right.0;
        let diff = (halves - whole.0).norm();
        let floor = T::of(64.0) * T::epsilon() * halves.norm();
        let local_tol = tol.max(T::of(self.opts.rel_tol) * halves.norm()).max(floor);
        if diff <= local_tol {
            return Ok((halves, diff, left.1 + right.1));
        }
        if depth >= self.opts.max_depth || mid <= a || mid >= b {
            self.failed = true;
            return Ok((halves, diff, left.1 + right.1));
        }
        let half_tol = tol / T::of(2.0);
        let (lv, le, li) = self.run(f, a, mid, left, half_tol, depth + 1)?;
        let (rv, re, ri) = self.run(f, mid, b, right, half_tol, depth + 1)?;
        Ok((lv + rv, le + re, li + ri))
    }
}

/// Adaptive 1-D integral of an integrand that may itself carry an error
/// estimate (the result of an inner integral).
pub fn integrate_1d<T, F>(mut f: F, a: T, b: T, opts: &QuadratureOptions) -> Result<QuadratureResult<T>, QuadratureError>
where
    T: Scalar,
    F: FnMut(T) -> Result<Panel<T>, EvalError>,
{
    if opts.order < 2 {
        return Err(QuadratureError::InvalidOrder);
    }
    let rule = GaussLegendre::new(opts.order);
    let mut ad = Adaptive {
        rule: &rule,
        opts,
        failed: false,
        deepest: 0,
        _t: std::marker::PhantomData,
    };
    let whole = ad.panel(&mut f, a, b)?;
    let (value, local, inherited) = ad.run(&mut f, a, b, whole, T::of(opts.abs_tol), 1)?;
    let error = local + inherited;
    if ad.failed || !(value.re.is_finite() && value.im.is_finite()) {
        return Err(QuadratureError::NonConvergent {
            value: value.re.to_f64_lossy(),
            error: error.to_f64_lossy(),
        });
    }
    Ok(QuadratureResult {
        value,
        error,
        levels: ad.deepest,
    })
}

/// Integration axis: symbol and limits.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub symbol: String,
    pub lo: f64,
    pub hi: f64,
}

impl Axis {
    pub fn new(symbol: &str, lo: f64, hi: f64) -> Self {
        Axis {
            symbol: symbol.to_string(),
            lo,
            hi,
        }
    }
}

/// Integrates `f` over the box `axes` (outermost first) with the remaining
/// symbols taken from `fixed`. Axes the integrand does not depend on
/// contribute their length exactly.
pub fn integrate_box<T: Scalar>(
    f: &Expr,
    axes: &[Axis],
    fixed: &Binding<T>,
    opts: &QuadratureOptions,
) -> Result<QuadratureResult<T>, QuadratureError> {
    let mut scale = T::one();
    let active: Vec<&Axis> = axes
        .iter()
        .filter(|ax| {
            let used = f.depends_on(&ax.symbol);
            if !used {
                scale = scale * T::of(ax.hi - ax.lo);
            }
            used
        })
        .collect();
    let mut slots: Vec<String> = active.iter().map(|a| a.symbol.clone()).collect();
    for s in f.free_symbols() {
        if !slots.contains(&s) {
            slots.push(s);
        }
    }
    let program: Program<T> = Program::compile(f, &slots)?;
    let mut values = vec![Complex::new(T::zero(), T::zero()); slots.len()];
    for (k, s) in slots.iter().enumerate().skip(active.len()) {
        values[k] = fixed.get(s).ok_or_else(|| EvalError::Unbound(vec![s.clone()]))?;
    }
    let mut levels = 0;
    let mut stack = Vec::new();
    let (value, error) = nested(&program, &active, 0, &mut values, &mut stack, opts, &mut levels)?;
    Ok(QuadratureResult {
        value: value * scale,
        error: error * scale.abs(),
        levels,
    })
}

fn nested<T: Scalar>(
    program: &Program<T>,
    axes: &[&Axis],
    k: usize,
    values: &mut Vec<Complex<T>>,
    stack: &mut Vec<Complex<T>>,
    opts: &QuadratureOptions,
    levels: &mut u32,
) -> Result<Panel<T>, QuadratureError> {
    if k == axes.len() {
        return Ok((program.eval_with(values, stack)?, T::zero()));
    }
    let ax = axes[k];
    let mut inner_err: Option<QuadratureError> = None;
    let res = integrate_1d(
        |x| {
            values[k] = Complex::new(x, T::zero());
            match nested(program, axes, k + 1, values, stack, opts, levels) {
                Ok(p) => Ok(p),
                Err(QuadratureError::Eval(e)) => Err(e),
                Err(other) => {
                    // Keep integrating with the best inner value; report at the end.
                    let (v, e) = match &other {
                        QuadratureError::NonConvergent { value, error } => (*value, *error),
                        _ => (f64::NAN, f64::NAN),
                    };
                    inner_err.get_or_insert(other);
                    Ok((Complex::new(T::of(v), T::zero()), T::of(e)))
                }
            }
        },
        T::of(ax.lo),
        T::of(ax.hi),
        opts,
    );
    let res = res?;
    *levels = (*levels).max(res.levels);
    if let Some(e) = inner_err {
        return Err(match e {
            QuadratureError::NonConvergent { .. } => QuadratureError::NonConvergent {
                value: res.value.re.to_f64_lossy(),
                error: res.error.to_f64_lossy(),
            },
            other => other,
        });
    }
    Ok((res.value, res.error))
}

/// Spherical coordinate names used by [`integrate_spherical`].
#[derive(Debug, Clone, PartialEq)]
pub struct SphericalDomain {
    pub r: String,
    pub theta: String,
    pub phi: String,
    pub r_max: f64,
}

impl SphericalDomain {
    pub fn new(r_max: f64) -> Self {
        SphericalDomain {
            r: "r".into(),
            theta: "theta".into(),
            phi: "phi".into(),
            r_max,
        }
    }
}

/// ∫ f r² sinθ dr dθ dφ over the ball of radius `r_max`.
pub fn integrate_spherical<T: Scalar>(
    f: &Expr,
    dom: &SphericalDomain,
    fixed: &Binding<T>,
    opts: &QuadratureOptions,
) -> Result<QuadratureResult<T>, QuadratureError> {
    let r = Expr::sym(&dom.r);
    let jac = r.powi(2) * symexpr::sin(&Expr::sym(&dom.theta));
    let g = f.clone() * jac;
    let axes = [
        Axis::new(&dom.r, 0.0, dom.r_max),
        Axis::new(&dom.theta, 0.0, std::f64::consts::PI),
        Axis::new(&dom.phi, 0.0, 2.0 * std::f64::consts::PI),
    ];
    integrate_box(&g, &axes, fixed, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::parse;
    use std::f64::consts::PI;

    #[test]
    fn rule_integrates_polynomials_exactly() {
        let rule = GaussLegendre::new(8);
        let s: f64 = rule.points().map(|(x, w)| w * x.powi(14)).sum();
        assert!((s - 2.0 / 15.0).abs() < 1e-14);
        let total: f64 = GaussLegendre::new(64).points().map(|(_, w)| w).sum();
        assert!((total - 2.0).abs() < 1e-13);
    }

    #[test]
    fn ball_of_decaying_density() {
        let f = parse("exp(-2*r)").unwrap();
        let q = integrate_spherical::<f64>(&f, &SphericalDomain::new(40.0), &Binding::new(), &QuadratureOptions::default()).unwrap();
        assert!((q.value.re - PI).abs() < 1e-8);
        assert!((q.value.re - PI).abs() <= q.error.max(1e-15) || (q.value.re - PI).abs() < 1e-14);
    }

    #[test]
    fn unit_box_with_sine() {
        let f = parse("sin(theta)").unwrap();
        let axes = [Axis::new("r", 0.0, 1.0), Axis::new("theta", 0.0, PI), Axis::new("phi", 0.0, 2.0 * PI)];
        let q = integrate_box::<f64>(&f, &axes, &Binding::new(), &QuadratureOptions::default()).unwrap();
        assert!((q.value.re - 4.0 * PI).abs() < 1e-10);
    }

    #[test]
    fn divergent_is_flagged() {
        let f = parse("1/r").unwrap();
        let err = integrate_box::<f64>(&f, &[Axis::new("r", 0.0, 1.0)], &Binding::new(), &QuadratureOptions::default()).unwrap_err();
        assert!(matches!(err, QuadratureError::NonConvergent { .. }), "{err:?}");
    }
}
