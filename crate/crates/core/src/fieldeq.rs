//! Quantum stress-energy and the reformulated field equation
//! G_μν = −(8πG/c⁴) ρ (ℏ²/m²) [⟨∂_μΨ|∂_μΨ⟩⟨∂_νΨ|∂_νΨ⟩]^{1/2}.

use std::f64::consts::PI;

use thiserror::Error;

use crate::geometry::{Geometry, GeometryError};
use crate::numeric::linalg::{self, Matrix};
use crate::numeric::{integrate_box, integrate_spherical, Axis, QuadratureError, QuadratureOptions, SphericalDomain};
use crate::qmetric::{metric_at, MetricTensor, WaveFunction};
use crate::symexpr::{self, substitute_one, Binding, EvalError, Expr, Program};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UnitMode {
    #[default]
    Dimensionless,
    Si,
}

impl UnitMode {
    pub fn name(self) -> &'static str {
        match self {
            UnitMode::Dimensionless => "dimensionless",
            UnitMode::Si => "si",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    pub rho: f64,
    pub m: f64,
    pub hbar: f64,
    pub g: f64,
    pub c: f64,
    pub units: UnitMode,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        PhysicalParams {
            rho: 1.0,
            m: 1.0,
            hbar: 1.0,
            g: 1.0,
            c: 1.0,
            units: UnitMode::Dimensionless,
        }
    }
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<(), FieldEqError> {
        for (name, v) in [("rho", self.rho), ("m", self.m), ("hbar", self.hbar), ("G", self.g), ("c", self.c)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(FieldEqError::BadParameter(name.to_string()));
            }
        }
        Ok(())
    }

    /// 8πG/c⁴
    pub fn coupling(&self) -> f64 {
        8.0 * PI * self.g / self.c.powi(4)
    }

    /// Sets a parameter by name (`rho`, `m`, `hbar`, `G`, `c`).
    pub fn set(&mut self, name: &str, value: f64) -> bool {
        match name {
            "rho" => self.rho = value,
            "m" => self.m = value,
            "hbar" => self.hbar = value,
            "G" => self.g = value,
            "c" => self.c = value,
            _ => return false,
        }
        true
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldEqError {
    #[error("parameter `{0}` must be finite and positive")]
    BadParameter(String),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("every point failed: {}", .0.failures().join("; "))]
    AllPointsFailed(Box<FieldEquationReport>),
}

/// How the bra-kets are read.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Bracket {
    /// Conjugated L² inner product over the ball r < R_max at fixed t.
    #[default]
    Integrated,
    /// Local density conj(a)·b at one spatial point.
    Pointwise(Binding<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldEqOptions {
    pub quadrature: QuadratureOptions,
    /// R_max in units of a0 (a0 = 1 when the wave function has none).
    pub r_max_a0: f64,
    pub bracket: Bracket,
    /// Use the un-rooted product ⟨⟩⟨⟩ instead of its square root.
    pub unrooted: bool,
}

impl Default for FieldEqOptions {
    fn default() -> Self {
        FieldEqOptions {
            quadrature: QuadratureOptions::default(),
            r_max_a0: 40.0,
            bracket: Bracket::Integrated,
            unrooted: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerProduct {
    pub value: f64,
    pub imag: f64,
    /// |imag| exceeded 1e-8.
    pub imag_flag: bool,
    pub error: f64,
    /// Estimate of the neglected part beyond R_max (integral over (R, 2R)).
    pub tail: f64,
}

fn bindings(w: &WaveFunction, p: &PhysicalParams, t0: f64) -> Binding<f64> {
    let mut b = w.bindings();
    b.set(w.chart.c_symbol(), p.c);
    if let Some(t) = w.chart.time_index() {
        b.set(w.chart.coord(t), t0);
    }
    b
}

fn r_max(w: &WaveFunction, opts: &FieldEqOptions) -> f64 {
    opts.r_max_a0 * w.params.get_real("a0").unwrap_or(1.0)
}

/// ⟨a|b⟩ = ∫ conj(a)·b r²sinθ dr dθ dφ at t = t0 (or the pointwise density).
pub fn inner_product(
    a: &Expr,
    b: &Expr,
    w: &WaveFunction,
    p: &PhysicalParams,
    t0: f64,
    opts: &FieldEqOptions,
) -> Result<InnerProduct, FieldEqError> {
    let mut integrand = symexpr::conj(a) * b.clone();
    if let Some(t) = w.chart.time_index() {
        integrand = substitute_one(&integrand, w.chart.coord(t), &Expr::float(t0));
    }
    let fixed = bindings(w, p, t0);
    if let Bracket::Pointwise(point) = &opts.bracket {
        let v = symexpr::eval(&integrand, &fixed.merged(point))?;
        return Ok(InnerProduct {
            value: v.re,
            imag: v.im,
            imag_flag: v.im.abs() > 1e-8,
            error: 0.0,
            tail: 0.0,
        });
    }
    let c = w.chart.coords();
    let dom = SphericalDomain {
        r: c[0].clone(),
        theta: c[1].clone(),
        phi: c[2].clone(),
        r_max: r_max(w, opts),
    };
    let q = integrate_spherical(&integrand, &dom, &fixed, &opts.quadrature)?;
    let shell = integrand * Expr::sym(&dom.r).powi(2) * symexpr::sin(&Expr::sym(&dom.theta));
    let axes = [
        Axis::new(&dom.r, dom.r_max, 2.0 * dom.r_max),
        Axis::new(&dom.theta, 0.0, PI),
        Axis::new(&dom.phi, 0.0, 2.0 * PI),
    ];
    let tail = match integrate_box(&shell, &axes, &fixed, &opts.quadrature) {
        Ok(t) => t.value.norm(),
        Err(QuadratureError::NonConvergent { value, .. }) => value.abs(),
        Err(e) => return Err(e.into()),
    };
    Ok(InnerProduct {
        value: q.value.re,
        imag: q.value.im,
        imag_flag: q.value.im.abs() > 1e-8,
        error: q.error,
        tail,
    })
}

/// ⟨D_μΨ|D_μΨ⟩ for every coordinate.
pub fn derivative_norms(w: &WaveFunction, p: &PhysicalParams, t0: f64, opts: &FieldEqOptions) -> Result<Vec<InnerProduct>, FieldEqError> {
    (0..w.chart.dim())
        .map(|mu| {
            let d = w.covariant_derivative(mu);
            inner_product(&d, &d, w, p, t0, opts)
        })
        .collect()
}

fn product(norms: &[InnerProduct], mu: usize, nu: usize, p: &PhysicalParams, unrooted: bool) -> f64 {
    let prod = norms[mu].value * norms[nu].value;
    let bracket = if unrooted { prod } else { prod.max(0.0).sqrt() };
    (p.hbar / p.m).powi(2) * bracket
}

/// v_μ v_ν = (ℏ²/m²) [⟨D_μΨ|D_μΨ⟩⟨D_νΨ|D_νΨ⟩]^{1/2}
pub fn velocity_product(
    w: &WaveFunction,
    mu: usize,
    nu: usize,
    p: &PhysicalParams,
    t0: f64,
    opts: &FieldEqOptions,
) -> Result<f64, FieldEqError> {
    p.validate()?;
    let norms = derivative_norms(w, p, t0, opts)?;
    Ok(product(&norms, mu, nu, p, opts.unrooted))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RhsReport {
    pub rhs: Matrix<f64>,
    pub norms: Vec<InnerProduct>,
    /// ⟨Ψ|Ψ⟩ as given (no normalisation applied).
    pub psi_norm: InnerProduct,
}

/// RHS_μν = −(8πG/c⁴) ρ v_μ v_ν.
pub fn field_equation_rhs(w: &WaveFunction, p: &PhysicalParams, t0: f64, opts: &FieldEqOptions) -> Result<RhsReport, FieldEqError> {
    p.validate()?;
    let norms = derivative_norms(w, p, t0, opts)?;
    let n = w.chart.dim();
    let k = -p.coupling() * p.rho;
    let mut rhs = linalg::zeros(n);
    for mu in 0..n {
        for nu in mu..n {
            let v = k * product(&norms, mu, nu, p, opts.unrooted) + 0.0;
            rhs[mu][nu] = v;
            rhs[nu][mu] = v;
        }
    }
    let psi_norm = inner_product(&w.psi, &w.psi, w, p, t0, opts)?;
    Ok(RhsReport { rhs, norms, psi_norm })
}

#[derive(Debug, Clone, PartialEq)]
pub enum PointOutcome {
    Ok { lhs: Matrix<f64>, residual_max: f64 },
    DegenerateMetric { rank: usize },
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub point: Binding<f64>,
    pub outcome: PointOutcome,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldEquationReport {
    pub params: PhysicalParams,
    pub rhs: RhsReport,
    pub points: Vec<PointResult>,
}

impl FieldEquationReport {
    pub fn failures(&self) -> Vec<String> {
        self.points
            .iter()
            .filter_map(|r| match &r.outcome {
                PointOutcome::DegenerateMetric { rank } => Some(format!("degenerate metric (rank {rank})")),
                PointOutcome::Failed(e) => Some(e.clone()),
                PointOutcome::Ok { .. } => None,
            })
            .collect()
    }
}

/// Evaluates G_μν − RHS_μν at each point. Points where the metric cannot be
/// inverted are flagged; the call fails only when every point fails.
pub fn field_equation_residual(
    g: &MetricTensor,
    w: &WaveFunction,
    p: &PhysicalParams,
    points: &[Binding<f64>],
    t0: f64,
    opts: &FieldEqOptions,
) -> Result<FieldEquationReport, FieldEqError> {
    let rhs = field_equation_rhs(w, p, t0, opts)?;
    let n = g.dim();
    let results: Vec<PointResult> = match Geometry::new(g) {
        Err(GeometryError::DegenerateMetric { rank, .. }) => points
            .iter()
            .map(|pt| PointResult {
                point: pt.clone(),
                outcome: PointOutcome::DegenerateMetric { rank },
            })
            .collect(),
        Err(e) => points
            .iter()
            .map(|pt| PointResult {
                point: pt.clone(),
                outcome: PointOutcome::Failed(e.to_string()),
            })
            .collect(),
        Ok(mut geo) => {
            let ein = geo.einstein().clone();
            let defaults = g.bindings();
            let programs: Vec<Program<f64>> = (0..n * n).map(|k| Program::compile_auto(ein.get(&[k / n, k % n]))).collect();
            points
                .iter()
                .map(|pt| {
                    let b = defaults.merged(pt);
                    let outcome = match metric_at(g, &b) {
                        Err(e) => PointOutcome::Failed(e.to_string()),
                        Ok(m) if linalg::rank(&m, 1e-12).rank < n => PointOutcome::DegenerateMetric {
                            rank: linalg::rank(&m, 1e-12).rank,
                        },
                        Ok(_) => {
                            let mut lhs = linalg::zeros(n);
                            let mut err = None;
                            for (k, prog) in programs.iter().enumerate() {
                                match prog.values_from(&b).and_then(|v| prog.eval(&v)) {
                                    Ok(v) => lhs[k / n][k % n] = v.re,
                                    Err(e) => {
                                        err = Some(e.to_string());
                                        break;
                                    }
                                }
                            }
                            match err {
                                Some(e) => PointOutcome::Failed(e),
                                None => PointOutcome::Ok {
                                    residual_max: linalg::max_abs_diff(&lhs, &rhs.rhs),
                                    lhs,
                                },
                            }
                        }
                    };
                    PointResult { point: pt.clone(), outcome }
                })
                .collect()
        }
    };
    let report = FieldEquationReport {
        params: *p,
        rhs,
        points: results,
    };
    if report.points.is_empty() || report.failures().len() < report.points.len() {
        Ok(report)
    } else {
        Err(FieldEqError::AllPointsFailed(Box::new(report)))
    }
}

/// Classical dust form T_μν = ρc² u^μ u^ν with u = dx/ds, x⁰ = ct.
pub fn classical_stress_energy(rho: f64, c: f64, u: &[f64]) -> Matrix<f64> {
    u.iter().map(|a| u.iter().map(|b| rho * c * c * a * b).collect()).collect()
}

/// dx/ds of a particle at rest (ds = c dt): 1 in the time slot, 0 elsewhere.
pub fn static_worldline(dim: usize, time: usize) -> Vec<f64> {
    (0..dim).map(|k| if k == time { 1.0 } else { 0.0 }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmetric::builtin;

    fn normalized_1s() -> WaveFunction {
        builtin("hydrogen-1s").unwrap().with_param("C", 1.0 / PI.sqrt())
    }

    #[test]
    fn unnormalized_norm_is_pi() {
        let w = builtin("hydrogen-1s").unwrap();
        let ip = inner_product(&w.psi, &w.psi, &w, &PhysicalParams::default(), 0.3, &FieldEqOptions::default()).unwrap();
        assert!((ip.value - PI).abs() < 1e-8, "{ip:?}");
        assert!(!ip.imag_flag);
    }

    #[test]
    fn derivative_norms_of_ground_state() {
        let w = normalized_1s().with_param("omega0", 1.5).with_param("a0", 1.0);
        let n = derivative_norms(&w, &PhysicalParams::default(), 0.0, &FieldEqOptions::default()).unwrap();
        assert!((n[0].value - 1.0).abs() < 1e-9);
        assert!((n[3].value - 2.25).abs() < 1e-9);
        assert!(n[1].value.abs() < 1e-15 && n[2].value.abs() < 1e-15);
        let v = velocity_product(&w, 0, 3, &PhysicalParams::default(), 0.0, &FieldEqOptions::default()).unwrap();
        assert!((v - 1.5).abs() < 1e-9);
    }

    #[test]
    fn rhs_radial_figure() {
        let rep = field_equation_rhs(&normalized_1s(), &PhysicalParams::default(), 0.0, &FieldEqOptions::default()).unwrap();
        assert!((rep.rhs[0][0] + 8.0 * PI).abs() < 1e-6, "{}", rep.rhs[0][0]);
        assert_eq!(rep.rhs[0][3], rep.rhs[3][0]);
        assert!((0..4).all(|i| rep.rhs[i][i] <= 0.0));
    }

    #[test]
    fn zero_wave_function() {
        let mut w = builtin("hydrogen-1s").unwrap();
        w.psi = Expr::zero();
        let rep = field_equation_rhs(&w, &PhysicalParams::default(), 0.0, &FieldEqOptions::default()).unwrap();
        assert_eq!(linalg::max_abs(&rep.rhs), 0.0);
    }

    #[test]
    fn static_dust() {
        let t = classical_stress_energy(2.5, 3.0, &static_worldline(4, 3));
        assert_eq!(t[3][3], 2.5 * 9.0);
        assert_eq!(linalg::max_abs(&t), t[3][3]);
    }

    fn frw_points() -> Vec<Binding<f64>> {
        (0..5)
            .map(|k| {
                let k = k as f64;
                Binding::new().with("r", 0.5 + 0.3 * k).with("theta", 0.4 + 0.2 * k).with("phi", 0.1 * k).with("t", 1.0 + 0.25 * k)
            })
            .collect()
    }

    #[test]
    fn residual_against_frw() {
        let g = crate::frw::frw_metric(&crate::parse("t^2").unwrap(), &Expr::zero(), &crate::qmetric::Chart::polar());
        let w = builtin("hydrogen-1s").unwrap();
        let rep = field_equation_residual(&g, &w, &PhysicalParams::default(), &frw_points(), 0.0, &FieldEqOptions::default()).unwrap();
        assert!(linalg::is_symmetric(&rep.rhs.rhs, 1e-10));
        for p in &rep.points {
            let PointOutcome::Ok { lhs, residual_max } = &p.outcome else { panic!("{p:?}") };
            assert!(residual_max.is_finite());
            assert!(linalg::is_symmetric(lhs, 1e-10));
            assert_eq!(*residual_max, linalg::max_abs_diff(lhs, &rep.rhs.rhs));
        }
    }

    #[test]
    fn zero_wave_residual_is_einstein() {
        let g = crate::frw::frw_metric(&crate::parse("t^2").unwrap(), &Expr::one(), &crate::qmetric::Chart::polar());
        let mut w = builtin("hydrogen-1s").unwrap();
        w.psi = Expr::zero();
        let rep = field_equation_residual(&g, &w, &PhysicalParams::default(), &frw_points(), 0.0, &FieldEqOptions::default()).unwrap();
        for p in &rep.points {
            let PointOutcome::Ok { lhs, residual_max } = &p.outcome else { panic!() };
            assert_eq!(*residual_max, linalg::max_abs(lhs));
        }
    }

    #[test]
    fn quantum_metric_points_are_degenerate() {
        let w = builtin("hydrogen-1s").unwrap();
        let g = crate::qmetric::build_metric(&w, Default::default());
        let err = field_equation_residual(&g, &w, &PhysicalParams::default(), &frw_points(), 0.0, &FieldEqOptions::default()).unwrap_err();
        let FieldEqError::AllPointsFailed(rep) = err else { panic!() };
        assert!(rep.points.iter().all(|p| matches!(p.outcome, PointOutcome::DegenerateMetric { rank: 2 })));
    }

    #[test]
    fn pointwise_density() {
        let w = builtin("hydrogen-1s").unwrap();
        let opts = FieldEqOptions {
            bracket: Bracket::Pointwise(Binding::new().with("r", 1.0).with("theta", 0.5).with("phi", 0.0)),
            ..Default::default()
        };
        let ip = inner_product(&w.psi, &w.psi, &w, &PhysicalParams::default(), 0.0, &opts).unwrap();
        assert!((ip.value - (-2.0f64).exp()).abs() < 1e-15);
    }
}
