//! Levi-Civita tensor calculus over a symbolic metric.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::numeric::linalg;
use crate::qmetric::{metric_at, Chart, MetricError, MetricTensor};
use crate::symexpr::{
    differentiate, equivalent, simplify, Binding, EquivError, EquivOptions, Expr, Program, DEFAULT_INTERVAL, DEFAULT_SEED,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("metric is degenerate (numeric rank {rank} of {dim})")]
    DegenerateMetric { rank: usize, dim: usize },
    #[error("cannot decide whether the determinant vanishes: {0}")]
    Undecided(#[from] EquivError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variance {
    Up,
    Down,
}

/// Dense tensor over a chart; components keyed by multi-index.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorField {
    pub chart: Chart,
    pub variance: Vec<Variance>,
    comps: Vec<Expr>,
}

impl TensorField {
    pub fn from_fn(chart: Chart, variance: Vec<Variance>, mut f: impl FnMut(&[usize]) -> Expr) -> Self {
        let n = chart.dim();
        let rank = variance.len();
        let total = n.pow(rank as u32);
        let mut comps = Vec::with_capacity(total);
        let mut idx = vec![0; rank];
        for flat in 0..total {
            let mut rem = flat;
            for k in (0..rank).rev() {
                idx[k] = rem % n;
                rem /= n;
            }
            comps.push(f(&idx));
        }
        TensorField { chart, variance, comps }
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn rank(&self) -> usize {
        self.variance.len()
    }

    fn flat(&self, idx: &[usize]) -> usize {
        assert_eq!(idx.len(), self.rank(), "index arity");
        let n = self.dim();
        idx.iter().fold(0, |acc, &i| {
            assert!(i < n, "index {i} out of range");
            acc * n + i
        })
    }

    pub fn get(&self, idx: &[usize]) -> &Expr {
        &self.comps[self.flat(idx)]
    }

    pub fn components(&self) -> impl Iterator<Item = (Vec<usize>, &Expr)> {
        let n = self.dim();
        let rank = self.rank();
        self.comps.iter().enumerate().map(move |(flat, e)| {
            let mut idx = vec![0; rank];
            let mut rem = flat;
            for k in (0..rank).rev() {
                idx[k] = rem % n;
                rem /= n;
            }
            (idx, e)
        })
    }

    /// Every component is structurally zero.
    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(Expr::is_zero)
    }

    pub fn map(&self, f: impl Fn(&Expr) -> Expr) -> Self {
        TensorField {
            chart: self.chart.clone(),
            variance: self.variance.clone(),
            comps: self.comps.iter().map(f).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GeometryOptions {
    /// Simplify after every stage.
    pub simplify: bool,
    pub seed: u64,
}

impl Default for GeometryOptions {
    fn default() -> Self {
        GeometryOptions {
            simplify: true,
            seed: DEFAULT_SEED,
        }
    }
}

/// The full curvature chain of one metric, computed stage by stage.
#[derive(Debug, Clone)]
pub struct Geometry {
    pub metric: MetricTensor,
    pub inverse: TensorField,
    opts: GeometryOptions,
    christoffel: Option<TensorField>,
    riemann: Option<TensorField>,
    ricci: Option<TensorField>,
    scalar: Option<Expr>,
    einstein: Option<TensorField>,
}

impl Geometry {
    pub fn new(g: &MetricTensor) -> Result<Self, GeometryError> {
        Self::with_options(g, GeometryOptions::default())
    }

    pub fn with_options(g: &MetricTensor, opts: GeometryOptions) -> Result<Self, GeometryError> {
        let inverse = inverse_metric_with(g, &opts)?;
        Ok(Geometry {
            metric: g.clone(),
            inverse,
            opts,
            christoffel: None,
            riemann: None,
            ricci: None,
            scalar: None,
            einstein: None,
        })
    }

    fn tidy(&self, e: Expr) -> Expr {
        if self.opts.simplify {
            simplify(&e)
        } else {
            e
        }
    }

    fn n(&self) -> usize {
        self.metric.dim()
    }

    fn x(&self, i: usize) -> &str {
        self.metric.chart.coord(i)
    }

    /// Γ^λ_{μν} = ½ g^{λσ}(∂_μ g_{σν} + ∂_ν g_{σμ} − ∂_σ g_{μν}).
    pub fn christoffel(&mut self) -> &TensorField {
        if self.christoffel.is_none() {
            let n = self.n();
            let g = &self.metric;
            // dg[s][m][k] = ∂_k g_{sm}
            let dg: Vec<Vec<Vec<Expr>>> = (0..n)
                .map(|s| (0..n).map(|m| (0..n).map(|k| differentiate(g.get(s, m), self.x(k))).collect()).collect())
                .collect();
            let mut lower = vec![Expr::zero(); n * n * n];
            for s in 0..n {
                for m in 0..n {
                    for v in m..n {
                        let e = Expr::add_all([dg[s][v][m].clone(), dg[s][m][v].clone(), dg[m][v][s].neg()]);
                        lower[(s * n + m) * n + v] = e.clone();
                        lower[(s * n + v) * n + m] = e;
                    }
                }
            }
            let half = Expr::rational(1, 2);
            let mut upper = vec![Expr::zero(); n * n * n];
            for l in 0..n {
                for m in 0..n {
                    for v in m..n {
                        let sum = Expr::add_all((0..n).map(|s| self.inverse.get(&[l, s]).clone() * lower[(s * n + m) * n + v].clone()));
                        let e = self.tidy(half.clone() * sum);
                        upper[(l * n + m) * n + v] = e.clone();
                        upper[(l * n + v) * n + m] = e;
                    }
                }
            }
            let t = TensorField::from_fn(self.metric.chart.clone(), vec![Variance::Up, Variance::Down, Variance::Down], |i| {
                upper[(i[0] * n + i[1]) * n + i[2]].clone()
            });
            self.christoffel = Some(t);
        }
        self.christoffel.as_ref().unwrap()
    }

    /// R^ρ_{σμν} = ∂_μΓ^ρ_{νσ} − ∂_νΓ^ρ_{μσ} + Γ^ρ_{μλ}Γ^λ_{νσ} − Γ^ρ_{νλ}Γ^λ_{μσ}.
    pub fn riemann(&mut self) -> &TensorField {
        if self.riemann.is_none() {
            let n = self.n();
            let gam = self.christoffel().clone();
            let mut comps = vec![Expr::zero(); n.pow(4)];
            let at = |r: usize, s: usize, m: usize, v: usize| ((r * n + s) * n + m) * n + v;
            for r in 0..n {
                for s in 0..n {
                    for m in 0..n {
                        for v in m + 1..n {
                            let mut terms = vec![
                                differentiate(gam.get(&[r, v, s]), self.x(m)),
                                differentiate(gam.get(&[r, m, s]), self.x(v)).neg(),
                            ];
                            for l in 0..n {
                                terms.push(gam.get(&[r, m, l]).clone() * gam.get(&[l, v, s]).clone());
                                terms.push((gam.get(&[r, v, l]).clone() * gam.get(&[l, m, s]).clone()).neg());
                            }
                            let e = self.tidy(Expr::add_all(terms));
                            comps[at(r, s, v, m)] = e.neg();
                            comps[at(r, s, m, v)] = e;
                        }
                    }
                }
            }
            let variance = vec![Variance::Up, Variance::Down, Variance::Down, Variance::Down];
            self.riemann = Some(TensorField::from_fn(self.metric.chart.clone(), variance, |i| {
                comps[at(i[0], i[1], i[2], i[3])].clone()
            }));
        }
        self.riemann.as_ref().unwrap()
    }

    /// R_{μν} = R^λ_{μλν}.
    pub fn ricci(&mut self) -> &TensorField {
        if self.ricci.is_none() {
            let n = self.n();
            let riem = self.riemann().clone();
            let mut comps = vec![Expr::zero(); n * n];
            for m in 0..n {
                for v in m..n {
                    let e = self.tidy(Expr::add_all((0..n).map(|l| riem.get(&[l, m, l, v]).clone())));
                    comps[m * n + v] = e.clone();
                    comps[v * n + m] = e;
                }
            }
            self.ricci = Some(TensorField::from_fn(self.metric.chart.clone(), vec![Variance::Down; 2], |i| {
                comps[i[0] * n + i[1]].clone()
            }));
        }
        self.ricci.as_ref().unwrap()
    }

    /// R = g^{μν}R_{μν}.
    pub fn scalar_curvature(&mut self) -> &Expr {
        if self.scalar.is_none() {
            let n = self.n();
            let ric = self.ricci().clone();
            let mut terms = Vec::new();
            for m in 0..n {
                for v in 0..n {
                    terms.push(self.inverse.get(&[m, v]).clone() * ric.get(&[m, v]).clone());
                }
            }
            self.scalar = Some(self.tidy(Expr::add_all(terms)));
        }
        self.scalar.as_ref().unwrap()
    }

    /// G_{μν} = R_{μν} − ½ R g_{μν}.
    pub fn einstein(&mut self) -> &TensorField {
        if self.einstein.is_none() {
            let n = self.n();
            let ric = self.ricci().clone();
            let r = self.scalar_curvature().clone();
            let half_r = Expr::rational(1, 2) * r;
            let mut comps = vec![Expr::zero(); n * n];
            for m in 0..n {
                for v in m..n {
                    let e = self.tidy(ric.get(&[m, v]).clone() - half_r.clone() * self.metric.get(m, v).clone());
                    comps[m * n + v] = e.clone();
                    comps[v * n + m] = e;
                }
            }
            self.einstein = Some(TensorField::from_fn(self.metric.chart.clone(), vec![Variance::Down; 2], |i| {
                comps[i[0] * n + i[1]].clone()
            }));
        }
        self.einstein.as_ref().unwrap()
    }

    /// Lowers the first index of a tensor whose first slot is up.
    pub fn lower_first(&self, t: &TensorField) -> TensorField {
        assert_eq!(t.variance[0], Variance::Up);
        let n = self.n();
        let mut variance = t.variance.clone();
        variance[0] = Variance::Down;
        TensorField::from_fn(t.chart.clone(), variance, |idx| {
            let mut j = idx.to_vec();
            let terms = (0..n).map(|a| {
                j[0] = a;
                self.metric.get(idx[0], a).clone() * t.get(&j).clone()
            });
            self.tidy(Expr::add_all(terms.collect::<Vec<_>>()))
        })
    }

    /// ∇_μ G^{μν} as symbolic components (index ν).
    pub fn einstein_divergence(&mut self) -> Vec<Expr> {
        let n = self.n();
        let gl = self.einstein().clone();
        let gam = self.christoffel().clone();
        let inv = &self.inverse;
        let mut up = vec![Expr::zero(); n * n];
        for m in 0..n {
            for v in m..n {
                let mut terms = Vec::new();
                for a in 0..n {
                    for b in 0..n {
                        terms.push(inv.get(&[m, a]).clone() * inv.get(&[v, b]).clone() * gl.get(&[a, b]).clone());
                    }
                }
                let e = self.tidy(Expr::add_all(terms));
                up[m * n + v] = e.clone();
                up[v * n + m] = e;
            }
        }
        (0..n)
            .map(|v| {
                let mut terms = Vec::new();
                for m in 0..n {
                    terms.push(differentiate(&up[m * n + v], self.x(m)));
                    for l in 0..n {
                        terms.push(gam.get(&[m, m, l]).clone() * up[l * n + v].clone());
                        terms.push(gam.get(&[v, m, l]).clone() * up[m * n + l].clone());
                    }
                }
                self.tidy(Expr::add_all(terms))
            })
            .collect()
    }
}

/// Per-point outcome of the contracted Bianchi check.
#[derive(Debug, Clone, PartialEq)]
pub enum DivergenceSample {
    /// max_ν |∇_μ G^{μν}|
    Norm(f64),
    Failed(String),
}

/// Evaluates ∇_μ G^{μν} at every point; failures are reported per point.
pub fn covariant_divergence_einstein(g: &MetricTensor, points: &[Binding<f64>]) -> Result<Vec<DivergenceSample>, GeometryError> {
    let mut geo = Geometry::new(g)?;
    let div = geo.einstein_divergence();
    let defaults = g.bindings();
    Ok(points
        .iter()
        .map(|p| {
            let b = defaults.merged(p);
            let mut worst: f64 = 0.0;
            for e in &div {
                let prog: Program<f64> = Program::compile_auto(e);
                match prog.values_from(&b).and_then(|v| prog.eval(&v)) {
                    Ok(v) => worst = worst.max(v.norm()),
                    Err(err) => return DivergenceSample::Failed(err.to_string()),
                }
            }
            DivergenceSample::Norm(worst)
        })
        .collect())
}

/// Symbolic determinant by cofactor expansion.
pub fn determinant(m: &[Vec<Expr>]) -> Expr {
    let n = m.len();
    match n {
        0 => Expr::one(),
        1 => m[0][0].clone(),
        2 => m[0][0].clone() * m[1][1].clone() - m[0][1].clone() * m[1][0].clone(),
        _ => Expr::add_all((0..n).filter(|&j| !m[0][j].is_zero()).map(|j| {
            let e = m[0][j].clone() * determinant(&minor(m, 0, j));
            if j % 2 == 1 {
                e.neg()
            } else {
                e
            }
        })),
    }
}

fn minor(m: &[Vec<Expr>], row: usize, col: usize) -> Vec<Vec<Expr>> {
    m.iter()
        .enumerate()
        .filter(|(i, _)| *i != row)
        .map(|(_, r)| r.iter().enumerate().filter(|(j, _)| *j != col).map(|(_, e)| e.clone()).collect())
        .collect()
}

pub fn inverse_metric(g: &MetricTensor) -> Result<TensorField, GeometryError> {
    inverse_metric_with(g, &GeometryOptions::default())
}

/// g^{μν} by adjugate over determinant; refuses metrics whose determinant
/// samples to zero.
pub fn inverse_metric_with(g: &MetricTensor, opts: &GeometryOptions) -> Result<TensorField, GeometryError> {
    let n = g.dim();
    let m: Vec<Vec<Expr>> = (0..n).map(|i| (0..n).map(|j| g.get(i, j).clone()).collect()).collect();
    let det = determinant(&m);
    let equiv_opts = EquivOptions {
        seed: opts.seed,
        ..EquivOptions::default()
    };
    let degenerate = det.is_zero() || equivalent(&det, &Expr::zero(), &equiv_opts)?.is_equivalent();
    if degenerate {
        return Err(GeometryError::DegenerateMetric {
            rank: sample_rank(g, opts.seed),
            dim: n,
        });
    }
    let tidy = |e: Expr| if opts.simplify { simplify(&e) } else { e };
    let comps: Vec<Expr> = if g.is_diagonal() {
        (0..n * n)
            .map(|k| if k / n == k % n { tidy(g.get(k / n, k / n).recip()) } else { Expr::zero() })
            .collect()
    } else {
        let inv_det = det.recip();
        let mut c = vec![Expr::zero(); n * n];
        for i in 0..n {
            for j in i..n {
                let cof = determinant(&minor(&m, j, i));
                let cof = if (i + j) % 2 == 1 { cof.neg() } else { cof };
                let e = tidy(cof * inv_det.clone());
                c[i * n + j] = e.clone();
                c[j * n + i] = e;
            }
        }
        c
    };
    Ok(TensorField::from_fn(g.chart.clone(), vec![Variance::Up; 2], |i| comps[i[0] * n + i[1]].clone()))
}

/// Largest numeric rank seen over a few random points.
fn sample_rank(g: &MetricTensor, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let defaults = g.bindings();
    let mut best = 0;
    for _ in 0..8 {
        let mut p = defaults.clone();
        for s in g.free_symbols().into_iter().chain(g.chart.coords().iter().cloned()) {
            if !p.contains(&s) {
                p.set(&s, rng.random_range(DEFAULT_INTERVAL.0..DEFAULT_INTERVAL.1));
            }
        }
        if let Ok(m) = metric_at(g, &p) {
            best = best.max(linalg::rank(&m, 1e-10).rank);
        }
    }
    best
}

/// Numeric g^{μσ}g_{σν} − δ at a point (max |entry|).
pub fn inverse_defect(g: &MetricTensor, inv: &TensorField, point: &Binding<f64>) -> Result<f64, MetricError> {
    let n = g.dim();
    let lower = metric_at(g, point)?;
    let b = g.bindings().merged(point);
    let mut upper = linalg::zeros::<f64>(n);
    for (i, row) in upper.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            let p: Program<f64> = Program::compile_auto(inv.get(&[i, j]));
            let v: Complex<f64> = p.eval(&p.values_from(&b)?)?;
            *x = v.re;
        }
    }
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let s: f64 = (0..n).map(|k| upper[i][k] * lower[k][j]).sum();
            let d = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((s - d).abs());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmetric::{build_metric, builtin, Convention};
    use crate::symexpr::{is_zero_by_sampling, parse};

    fn metric(coords: &[&str], sig: &[i8], time: Option<usize>, diag: &[&str]) -> MetricTensor {
        let chart = Chart::new(coords, sig, time).unwrap();
        MetricTensor::diagonal(chart, Binding::new(), diag.iter().map(|s| parse(s).unwrap()).collect())
    }

    fn sphere() -> MetricTensor {
        metric(&["theta", "phi"], &[1, 1], None, &["a^2", "a^2*sin(theta)^2"])
    }

    #[test]
    fn sphere_connection_and_curvature() {
        let mut geo = Geometry::new(&sphere()).unwrap();
        let gam = geo.christoffel().clone();
        let o = EquivOptions::default();
        assert!(equivalent(gam.get(&[0, 1, 1]), &parse("-sin(theta)*cos(theta)").unwrap(), &o).unwrap().is_equivalent());
        assert!(equivalent(gam.get(&[1, 0, 1]), &parse("cot(theta)").unwrap(), &o).unwrap().is_equivalent());
        assert_eq!(geo.scalar_curvature(), &parse("2/a^2").unwrap());
        assert!(geo.einstein().components().all(|(_, e)| is_zero_by_sampling(e, &o).unwrap()));
    }

    #[test]
    fn flat_space_is_flat() {
        let g = metric(&["r", "theta", "phi"], &[1, 1, 1], None, &["1", "r^2", "r^2*sin(theta)^2"]);
        let mut geo = Geometry::new(&g).unwrap();
        assert_eq!(geo.christoffel().get(&[0, 1, 1]), &parse("-r").unwrap());
        let o = EquivOptions::default();
        assert!(geo.riemann().components().all(|(_, e)| is_zero_by_sampling(e, &o).unwrap()));
    }

    #[test]
    fn constant_metric_has_no_connection() {
        let g = metric(&["x", "y"], &[1, 1], None, &["3", "5"]);
        assert!(Geometry::new(&g).unwrap().christoffel().is_zero());
    }

    #[test]
    fn inverse_of_flat_polar() {
        let g = metric(&["r", "theta", "phi", "t"], &[1, 1, 1, -1], Some(3), &["1", "r^2", "r^2*sin(theta)^2", "-c^2"]);
        let inv = inverse_metric(&g).unwrap();
        assert_eq!(inv.get(&[3, 3]), &parse("-1/c^2").unwrap());
        assert_eq!(inv.get(&[2, 2]), &parse("1/(r^2*sin(theta)^2)").unwrap());
    }

    #[test]
    fn s_state_metric_is_degenerate() {
        let g = build_metric(&builtin("hydrogen-1s").unwrap(), Convention::Unconjugated);
        assert_eq!(inverse_metric(&g).unwrap_err(), GeometryError::DegenerateMetric { rank: 2, dim: 4 });
    }

    #[test]
    fn non_diagonal_inverse() {
        let chart = Chart::euclidean(&["x", "y"]).unwrap();
        let g = MetricTensor::from_fn(chart, Binding::new(), |i, j| match (i, j) {
            (0, 0) => parse("1 + x^2").unwrap(),
            (1, 1) => parse("2 + y").unwrap(),
            _ => parse("x*y").unwrap(),
        });
        let inv = inverse_metric(&g).unwrap();
        let p = Binding::new().with("x", 0.7).with("y", 0.4);
        assert!(inverse_defect(&g, &inv, &p).unwrap() < 1e-12);
    }
}
